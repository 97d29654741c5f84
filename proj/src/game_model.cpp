#include "sebeu/game_model.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace sebeu {

namespace {

std::string player_field(int i, const char* name) {
  std::ostringstream os;
  os << "players[" << i << "]." << name;
  return os.str();
}

bool is_symmetric(const Matrix& M, double tol) {
  if (M.rows() != M.cols()) return false;
  if (M.size() == 0) return true;
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= tol;
}

double min_eigenvalue(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M));
  return es.eigenvalues().minCoeff();
}

struct Checker {
  ValidationReport& report;
  void fail(const std::string& field, const std::string& message) {
    report.violations.push_back({field, message});
  }
  // Returns true when the matrix has the required shape.
  bool shape(const Matrix& M, int rows, int cols, const std::string& field) {
    if (M.rows() != rows || M.cols() != cols) {
      std::ostringstream os;
      os << "expected " << rows << "x" << cols << ", got " << M.rows() << "x"
         << M.cols();
      fail(field, os.str());
      return false;
    }
    return true;
  }
  void positive_definite(const Matrix& M, const std::string& field, double pd_tol) {
    if (!is_symmetric(M, 1e-10)) {
      fail(field, "not symmetric");
      return;
    }
    if (min_eigenvalue(M) <= pd_tol)
      fail(field, "not positive definite (smallest eigenvalue <= pd_tolerance)");
  }
  void positive_semidefinite(const Matrix& M, const std::string& field, double psd_tol) {
    if (!is_symmetric(M, 1e-10)) {
      fail(field, "not symmetric");
      return;
    }
    if (min_eigenvalue(M) < -psd_tol)
      fail(field, "not positive semidefinite");
  }
};

void check_player_stage(Checker& ck, const PlayerSpec& p, const Matrix& A,
                        const Matrix& B, const Matrix& C, const Matrix& Q,
                        const Matrix& R, const Matrix& K, const Matrix& L,
                        int n_y, const std::string& prefix, double pd_tol) {
  const int nx = p.nx();
  const int nu = p.nu();
  ck.shape(A, nx, nx, prefix + ".A");
  ck.shape(B, nx, nu, prefix + ".B");
  ck.shape(C, nx, n_y, prefix + ".C");
  if (ck.shape(Q, nx, nx, prefix + ".Q_stage"))
    ck.positive_definite(Q, prefix + ".Q_stage", pd_tol);
  if (ck.shape(R, nu, nu, prefix + ".R"))
    ck.positive_definite(R, prefix + ".R", pd_tol);
  ck.shape(K, n_y, nu, prefix + ".K");
  ck.shape(L, n_y, nx, prefix + ".L");
}

}  // namespace

std::string ValidationReport::to_string() const {
  if (valid()) return "valid";
  std::ostringstream os;
  for (const auto& v : violations) os << v.field << ": " << v.message << "\n";
  return os.str();
}

bool is_stabilizable(const Matrix& A, const Matrix& B, double rank_tol) {
  const int n = static_cast<int>(A.rows());
  if (n == 0) return true;
  Eigen::EigenSolver<Matrix> es(A);
  for (int k = 0; k < n; ++k) {
    const std::complex<double> lambda = es.eigenvalues()(k);
    if (std::abs(lambda) < 1.0) continue;
    Eigen::MatrixXcd pbh(n, n + B.cols());
    pbh.leftCols(n) = A.cast<std::complex<double>>() -
                      lambda * Eigen::MatrixXcd::Identity(n, n);
    pbh.rightCols(B.cols()) = B.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pbh);
    svd.setThreshold(rank_tol);
    if (svd.rank() < n) return false;
  }
  return true;
}

ValidationReport validate(const GameSpec& spec, const Tolerances& tol) {
  ValidationReport report;
  Checker ck{report};

  const int N = spec.num_players();
  if (N < 1) {
    ck.fail("players", "at least one player required");
    return report;
  }
  const int T = spec.horizon.T;
  if (!spec.horizon.infinite && T < 1)
    ck.fail("horizon", "finite horizon requires T >= 1");

  const int n_y = spec.environment.ny();
  if (n_y < 1) ck.fail("environment.D", "environment dimension n_y must be >= 1");

  for (int i = 0; i < N; ++i) {
    const PlayerSpec& p = spec.players[static_cast<size_t>(i)];
    const std::string prefix = "players[" + std::to_string(i) + "]";
    check_player_stage(ck, p, p.A, p.B, p.C, p.Q_stage, p.R, p.K, p.L, n_y,
                       prefix, tol.pd_tol);
    if (!spec.horizon.infinite) {
      if (ck.shape(p.Q_terminal, p.nx(), p.nx(), prefix + ".Q_terminal"))
        ck.positive_definite(p.Q_terminal, prefix + ".Q_terminal", tol.pd_tol);
    }
    if (p.beta < 0.0 || p.beta > 1.0)
      ck.fail(player_field(i, "beta"), "discount factor must lie in [0,1]");
    if (spec.horizon.infinite) {
      if (p.beta >= 1.0)
        ck.fail(player_field(i, "beta"),
                "infinite horizon requires beta < 1");
      if (p.time_varying())
        ck.fail(player_field(i, "stages"),
                "infinite horizon requires time-invariant matrices");
      if (!is_stabilizable(p.A, p.B))
        ck.fail(player_field(i, "A"), "(A_i, B_i) not stabilizable");
    }
    if (p.time_varying()) {
      if (static_cast<int>(p.stages.size()) != T) {
        ck.fail(prefix + ".stages", "per-stage list must have length T");
      } else {
        for (int t = 0; t < T; ++t) {
          const PlayerStage& s = p.stages[static_cast<size_t>(t)];
          check_player_stage(ck, p, s.A, s.B, s.C, s.Q, s.R, s.K, s.L, n_y,
                             prefix + ".stages[" + std::to_string(t) + "]",
                             tol.pd_tol);
        }
      }
    }
  }

  // Environment block
  const EnvironmentSpec& env = spec.environment;
  const int n_x0 = env.nx0();
  if (spec.mean_field) {
    if (N != 1)
      ck.fail("players", "mean-field mode uses one representative player");
    if (n_x0 != 0)
      ck.fail("environment.A0", "mean-field mode has no environment state");
    if (!spec.horizon.infinite)
      ck.fail("horizon", "mean-field mode requires an infinite horizon");
    if (N >= 1 && spec.players[0].C.size() > 0 &&
        spec.players[0].C.cwiseAbs().maxCoeff() != 0.0)
      ck.fail("players[0].C", "mean-field mode requires C = 0");
  }
  ck.shape(env.A0, n_x0, n_x0, "environment.A0");
  ck.shape(env.D, n_y, n_x0, "environment.D");
  auto check_env_lists = [&](const std::vector<Matrix>& B1,
                             const std::vector<Matrix>& B2,
                             const std::vector<Matrix>& E1,
                             const std::vector<Matrix>& E2,
                             const std::string& prefix) {
    if (static_cast<int>(B1.size()) != N || static_cast<int>(B2.size()) != N ||
        static_cast<int>(E1.size()) != N || static_cast<int>(E2.size()) != N) {
      ck.fail(prefix, "per-player matrix lists must have one entry per player");
      return;
    }
    for (int i = 0; i < N; ++i) {
      const PlayerSpec& p = spec.players[static_cast<size_t>(i)];
      const std::string idx = "[" + std::to_string(i) + "]";
      ck.shape(B1[static_cast<size_t>(i)], n_x0, p.nu(), prefix + ".B1" + idx);
      ck.shape(B2[static_cast<size_t>(i)], n_x0, p.nx(), prefix + ".B2" + idx);
      ck.shape(E1[static_cast<size_t>(i)], n_y, p.nu(), prefix + ".E1" + idx);
      ck.shape(E2[static_cast<size_t>(i)], n_y, p.nx(), prefix + ".E2" + idx);
    }
  };
  check_env_lists(env.B1, env.B2, env.E1, env.E2, "environment");
  if (env.time_varying()) {
    if (spec.horizon.infinite) {
      ck.fail("environment.stages",
              "infinite horizon requires time-invariant matrices");
    } else if (static_cast<int>(env.stages.size()) != T) {
      ck.fail("environment.stages", "per-stage list must have length T");
    } else {
      for (int t = 0; t < T; ++t) {
        const EnvStage& s = env.stages[static_cast<size_t>(t)];
        const std::string prefix = "environment.stages[" + std::to_string(t) + "]";
        ck.shape(s.A0, n_x0, n_x0, prefix + ".A0");
        ck.shape(s.D, n_y, n_x0, prefix + ".D");
        check_env_lists(s.B1, s.B2, s.E1, s.E2, prefix);
      }
    }
  }
  if (spec.horizon.infinite && n_x0 > 0 &&
      spectral_radius(env.A0) >= 1.0 - tol.stability_margin)
    ck.fail("environment.A0", "A0 not stable (spectral radius >= 1)");

  // Noise block
  const NoiseSpec& noise = spec.noise;
  int x_dim = n_x0;
  for (const auto& p : spec.players) x_dim += p.nx();
  if (noise.x0_mean.size() != x_dim)
    ck.fail("noise.x0_mean", "length must equal the stacked state dimension " +
                                 std::to_string(x_dim));
  if (ck.shape(noise.x0_cov, x_dim, x_dim, "noise.x0_cov"))
    ck.positive_semidefinite(noise.x0_cov, "noise.x0_cov", tol.psd_tol);
  if (noise.w_mean.size() != x_dim)
    ck.fail("noise.w_mean", "length must equal the stacked state dimension " +
                                std::to_string(x_dim));
  if (ck.shape(noise.w_cov, x_dim, x_dim, "noise.w_cov"))
    ck.positive_semidefinite(noise.w_cov, "noise.w_cov", tol.psd_tol);
  if (noise.xi_mean.size() != n_y)
    ck.fail("noise.xi_mean", "length must equal n_y");
  if (ck.shape(noise.xi_cov, n_y, n_y, "noise.xi_cov"))
    ck.positive_semidefinite(noise.xi_cov, "noise.xi_cov", tol.psd_tol);
  if (noise.time_varying()) {
    if (spec.horizon.infinite) {
      ck.fail("noise", "infinite horizon requires time-invariant noise moments");
    } else {
      auto check_len = [&](size_t len, const char* field) {
        if (len != 0 && static_cast<int>(len) != T)
          ck.fail(std::string("noise.") + field,
                  "per-stage list must have length T");
      };
      check_len(noise.w_mean_stages.size(), "w_mean");
      check_len(noise.w_cov_stages.size(), "w_cov");
      check_len(noise.xi_mean_stages.size(), "xi_mean");
      check_len(noise.xi_cov_stages.size(), "xi_cov");
      for (const auto& m : noise.w_cov_stages)
        ck.positive_semidefinite(m, "noise.w_cov", tol.psd_tol);
      for (const auto& m : noise.xi_cov_stages)
        ck.positive_semidefinite(m, "noise.xi_cov", tol.psd_tol);
    }
  }

  return report;
}

namespace {

bool matrices_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

bool vectors_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() && a == b;
}

}  // namespace

bool are_identical(const GameSpec& spec, int i, int j) {
  const int N = spec.num_players();
  if (i < 0 || i >= N || j < 0 || j >= N)
    throw Error("are_identical: player index out of range");
  if (i == j) return true;
  const PlayerSpec& p = spec.players[static_cast<size_t>(i)];
  const PlayerSpec& q = spec.players[static_cast<size_t>(j)];

  if (p.beta != q.beta) return false;
  if (!matrices_equal(p.A, q.A) || !matrices_equal(p.B, q.B) ||
      !matrices_equal(p.C, q.C) || !matrices_equal(p.Q_stage, q.Q_stage) ||
      !matrices_equal(p.R, q.R) || !matrices_equal(p.K, q.K) ||
      !matrices_equal(p.L, q.L))
    return false;
  if (!spec.horizon.infinite && !matrices_equal(p.Q_terminal, q.Q_terminal))
    return false;
  if (p.stages.size() != q.stages.size()) return false;
  for (size_t t = 0; t < p.stages.size(); ++t) {
    const PlayerStage& s = p.stages[t];
    const PlayerStage& r = q.stages[t];
    if (!matrices_equal(s.A, r.A) || !matrices_equal(s.B, r.B) ||
        !matrices_equal(s.C, r.C) || !matrices_equal(s.Q, r.Q) ||
        !matrices_equal(s.R, r.R) || !matrices_equal(s.K, r.K) ||
        !matrices_equal(s.L, r.L))
      return false;
  }

  // Noise moments of the players' own blocks must match: initial state and
  // per-stage disturbances (means and covariance diagonals).
  const DimensionTable dims = stack_dimensions(spec);
  const int oi = dims.x_offset[static_cast<size_t>(i)];
  const int oj = dims.x_offset[static_cast<size_t>(j)];
  const int nx = dims.player_x[static_cast<size_t>(i)];
  if (dims.player_x[static_cast<size_t>(j)] != nx) return false;

  const NoiseSpec& noise = spec.noise;
  if (!vectors_equal(noise.x0_mean.segment(oi, nx), noise.x0_mean.segment(oj, nx)))
    return false;
  if (!matrices_equal(noise.x0_cov.block(oi, oi, nx, nx),
                      noise.x0_cov.block(oj, oj, nx, nx)))
    return false;
  const int stages = spec.horizon.infinite
                         ? 1
                         : std::max(1, spec.horizon.T);
  for (int t = 0; t < stages; ++t) {
    if (!vectors_equal(noise.w_mean_at(t).segment(oi, nx),
                       noise.w_mean_at(t).segment(oj, nx)))
      return false;
    if (!matrices_equal(noise.w_cov_at(t).block(oi, oi, nx, nx),
                        noise.w_cov_at(t).block(oj, oj, nx, nx)))
      return false;
    if (noise.w_mean_stages.empty() && noise.w_cov_stages.empty()) break;
  }
  return true;
}

DimensionTable stack_dimensions(const GameSpec& spec) {
  DimensionTable dims;
  dims.n_y = spec.environment.ny();
  dims.env_dim = spec.environment.nx0();
  int xo = dims.env_dim;
  int uo = 0;
  for (const auto& p : spec.players) {
    dims.player_x.push_back(p.nx());
    dims.player_u.push_back(p.nu());
    dims.x_offset.push_back(xo);
    dims.u_offset.push_back(uo);
    xo += p.nx();
    uo += p.nu();
  }
  dims.x_dim = xo;
  dims.u_dim = uo;
  return dims;
}

double stage_cost(const PlayerSpec& p, int t, const Vector& x, const Vector& u,
                  const Vector& y) {
  const Matrix& Q = p.Q_at(t);
  const Matrix& R = p.R_at(t);
  const Matrix& K = p.K_at(t);
  const Matrix& L = p.L_at(t);
  return x.dot(Q * x) + u.dot(R * u) + 2.0 * y.dot(K * u + L * x);
}

double terminal_cost(const PlayerSpec& p, const Vector& x) {
  return x.dot(p.Q_terminal * x);
}

}  // namespace sebeu
