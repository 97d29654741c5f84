#include "sebeu/lq_synthesis.hpp"

#include "sebeu/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace sebeu {

namespace {

double condition_number(const Matrix& M) {
  Eigen::JacobiSVD<Matrix> svd(M);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

Eigen::LDLT<Matrix> factor_S(const Matrix& S, int stage, const Tolerances& tol) {
  if (condition_number(S) > tol.s_cond_cap) {
    std::ostringstream os;
    os << "S_" << stage << " numerically singular (condition number above "
       << tol.s_cond_cap << ")";
    throw SynthesisError(os.str());
  }
  return Eigen::LDLT<Matrix>(S);
}

}  // namespace

Matrix riccati_step(const Matrix& A, const Matrix& B, const Matrix& Q,
                    const Matrix& R, double beta, const Matrix& M) {
  const Matrix S = R + beta * B.transpose() * M * B;
  const Matrix BtM = B.transpose() * M;
  const Matrix inner = M - beta * BtM.transpose() * S.ldlt().solve(BtM);
  return symmetrize(Q + beta * A.transpose() * inner * A);
}

TransformedCost completed_square_cost(const PlayerSpec& p, int t) {
  TransformedCost tc;
  tc.Q = p.Q_at(t);
  tc.R = p.R_at(t);
  const Matrix& K = p.K_at(t);
  const Matrix& L = p.L_at(t);
  tc.x_shift = tc.Q.ldlt().solve(L.transpose());
  tc.u_shift = tc.R.ldlt().solve(K.transpose());
  tc.z_weight = L * tc.x_shift + K * tc.u_shift;
  return tc;
}

FiniteGainSchedule riccati_backward(const PlayerSpec& p, int T,
                                    const std::vector<Vector>& w_mean,
                                    const Tolerances& tol) {
  if (T < 1) throw SynthesisError("riccati_backward: horizon must be >= 1");
  const double beta = p.beta;
  const int nu = p.nu();

  FiniteGainSchedule out;
  out.beta = beta;
  out.F.resize(static_cast<size_t>(T));
  out.G.resize(static_cast<size_t>(T));
  out.H.resize(static_cast<size_t>(T));
  out.S.resize(static_cast<size_t>(T));
  out.Phi.resize(static_cast<size_t>(T));
  out.M.resize(static_cast<size_t>(T) + 1);
  out.M[static_cast<size_t>(T)] = symmetrize(p.Q_terminal);

  std::vector<Eigen::LDLT<Matrix>> S_fact(static_cast<size_t>(T));
  for (int k = T - 1; k >= 0; --k) {
    const Matrix& A = p.A_at(k);
    const Matrix& B = p.B_at(k);
    const Matrix& C = p.C_at(k);
    const Matrix& K = p.K_at(k);
    const Matrix& Mn = out.M[static_cast<size_t>(k) + 1];
    const Matrix S = p.R_at(k) + beta * B.transpose() * Mn * B;
    out.S[static_cast<size_t>(k)] = S;
    S_fact[static_cast<size_t>(k)] = factor_S(S, k, tol);
    out.F[static_cast<size_t>(k)] =
        -beta * S_fact[static_cast<size_t>(k)].solve(B.transpose() * Mn * A);
    out.M[static_cast<size_t>(k)] = riccati_step(A, B, p.Q_at(k), p.R_at(k), beta, Mn);
    out.G[static_cast<size_t>(k)].resize(static_cast<size_t>(T - k));
    out.G[static_cast<size_t>(k)][0] = -S_fact[static_cast<size_t>(k)].solve(
        K.transpose() + beta * B.transpose() * Mn * C);
    (void)nu;
  }

  // Transition products Phi_{k,t} and the cross-stage gains G_{k,t}, t > k.
  for (int k = 0; k < T; ++k) {
    auto& Phi = out.Phi[static_cast<size_t>(k)];
    Phi.resize(static_cast<size_t>(T - k));
    Phi[0] = Matrix::Identity(p.nx(), p.nx());
    for (int t = k + 1; t < T; ++t) {
      const Matrix closed =
          beta * (p.A_at(t) + p.B_at(t) * out.F[static_cast<size_t>(t)]).transpose();
      Phi[static_cast<size_t>(t - k)] = Phi[static_cast<size_t>(t - k - 1)] * closed;
    }
    const Matrix& Bk = p.B_at(k);
    for (int t = k + 1; t < T; ++t) {
      const Matrix& Mt1 = out.M[static_cast<size_t>(t) + 1];
      const Matrix term =
          Phi[static_cast<size_t>(t - k)] * Mt1 * p.C_at(t) +
          Phi[static_cast<size_t>(t - k - 1)] *
              (out.F[static_cast<size_t>(t)].transpose() * p.K_at(t).transpose() +
               p.L_at(t).transpose());
      out.G[static_cast<size_t>(k)][static_cast<size_t>(t - k)] =
          -beta * S_fact[static_cast<size_t>(k)].solve(Bk.transpose() * term);
    }
    Vector acc = Vector::Zero(p.nx());
    for (int t = k; t < T; ++t) {
      const Vector wt = w_mean.empty() ? Vector::Zero(p.nx())
                                       : w_mean[static_cast<size_t>(t)];
      acc += Phi[static_cast<size_t>(t - k)] * out.M[static_cast<size_t>(t) + 1] * wt;
    }
    out.H[static_cast<size_t>(k)] =
        -beta * S_fact[static_cast<size_t>(k)].solve(Bk.transpose() * acc);
  }
  return out;
}

StationaryGains are_solve(const PlayerSpec& p, const Vector& w_mean,
                          const Tolerances& tol) {
  const double beta = p.beta;
  const int nx = p.nx();
  const Matrix& A = p.A;
  const Matrix& B = p.B;

  Matrix M = Matrix::Zero(nx, nx);
  int it = 0;
  for (; it < tol.are_max_iter; ++it) {
    const Matrix Mn = riccati_step(A, B, p.Q_stage, p.R, beta, M);
    const double delta = (Mn - M).cwiseAbs().maxCoeff();
    M = Mn;
    if (delta < tol.are_delta) break;
  }
  const Matrix residual_mat = M - riccati_step(A, B, p.Q_stage, p.R, beta, M);
  const double residual = residual_mat.cwiseAbs().maxCoeff();
  if (it >= tol.are_max_iter) {
    std::ostringstream os;
    os << "Riccati iteration did not converge within " << tol.are_max_iter
       << " iterations (residual " << residual << ")";
    throw SynthesisError(os.str());
  }

  StationaryGains g;
  g.beta = beta;
  g.M = M;
  g.S = p.R + beta * B.transpose() * M * B;
  auto S_fact = factor_S(g.S, -1, tol);
  g.F = -beta * S_fact.solve(B.transpose() * M * A);
  g.are_residual = residual;
  g.iterations = it + 1;
  const Matrix closed = A + B * g.F;
  g.closed_loop_radius = std::sqrt(beta) * spectral_radius(closed);
  if (g.closed_loop_radius >= 1.0) {
    std::ostringstream os;
    os << "synthesized closed loop not stable: rho(sqrt(beta)(A+BF)) = "
       << g.closed_loop_radius
       << " (contradicts the stabilizability/detectability premise)";
    throw SynthesisError(os.str());
  }

  // Lag gains: G_0 from the current-stage term; for n >= 1 the geometric
  // form G_n = -beta S^{-1} B' psi^{n-1} ((F'K' + L') + psi M C) with
  // psi = beta (A+BF)'. This is the stationary limit of the cross-stage
  // gains of the finite recursion (the lag-1 gain carries no extra psi);
  // truncated once the norms fall below a relative threshold.
  const Matrix psi = beta * closed.transpose();
  g.G.push_back(-S_fact.solve(p.K.transpose() + beta * B.transpose() * M * p.C));
  Matrix psi_pow = Matrix::Identity(nx, nx);  // psi^{n-1} for n = 1, 2, ...
  const Matrix base = g.F.transpose() * p.K.transpose() + p.L.transpose() +
                      psi * M * p.C;
  const double scale0 = g.G[0].cwiseAbs().maxCoeff();
  const Matrix G1 = -beta * S_fact.solve(B.transpose() * base);
  const double scale = std::max(scale0, G1.cwiseAbs().maxCoeff());
  const double tail_tol = tol.g_tail_rel * scale;
  if (scale > 0.0) {
    for (int n = 1; n < tol.g_tail_max; ++n) {
      const Matrix Gn = -beta * S_fact.solve(B.transpose() * (psi_pow * base));
      g.G.push_back(Gn);
      if (Gn.cwiseAbs().maxCoeff() < tail_tol) break;
      psi_pow = psi_pow * psi;
    }
  }

  const Matrix I = Matrix::Identity(nx, nx);
  const Vector wm =
      w_mean.size() == static_cast<Eigen::Index>(nx) ? w_mean : Vector::Zero(nx);
  g.H = -beta * S_fact.solve(
                    B.transpose() *
                    (I - beta * closed.transpose()).lu().solve(M * wm));
  return g;
}

BellmanResidualStats bellman_residual(const PlayerSpec& p,
                                      const StationaryGains& gains,
                                      const Vector& w_mean, int samples,
                                      uint64_t seed) {
  const double beta = p.beta;
  const int nx = p.nx();
  const int ny = p.ny();
  const Matrix& A = p.A;
  const Matrix& B = p.B;
  const Matrix& C = p.C;
  const Matrix& M = gains.M;
  const Matrix closedT = beta * (A + B * gains.F).transpose();
  const Vector wm =
      w_mean.size() == static_cast<Eigen::Index>(nx) ? w_mean : Vector::Zero(nx);
  auto S_fact = Eigen::LDLT<Matrix>(gains.S);

  // z-profiles have finite support; the strategy sees the same information.
  const int prof_len = std::min<int>(gains.n_tail() + 1, 40);

  PathRng rng(seed, 0, 0);
  BellmanResidualStats stats;
  stats.samples = samples;
  for (int s = 0; s < samples; ++s) {
    Vector x(nx);
    for (int i = 0; i < nx; ++i) x(i) = rng.normal();
    std::vector<Vector> zhat(static_cast<size_t>(prof_len));
    for (auto& z : zhat) {
      z.resize(ny);
      for (int i = 0; i < ny; ++i) z(i) = rng.normal();
    }

    // Direct minimizer of the one-stage quadratic: derivative of
    //   |u + R^{-1}K'z0|^2_R + beta E |A x + B u + C z0 + w|^2_M
    //   + 2 beta (A x + B u + ...)' E[N(Z_0)]
    // where E[N] is accumulated as sum_j psi'^j vhat_{1+j} numerically.
    Vector n_acc = Vector::Zero(nx);
    Matrix pow = Matrix::Identity(nx, nx);  // (beta (A+BF)')^j
    const int far = std::max(prof_len + 1, 2000);
    for (int j = 0; j + 1 <= far; ++j) {
      const Vector zt = (j + 1) < prof_len ? zhat[static_cast<size_t>(j + 1)]
                                           : Vector::Zero(ny);
      const Vector v = (gains.F.transpose() * p.K.transpose() + p.L.transpose()) * zt +
                       closedT * (M * (C * zt + wm));
      n_acc += pow * v;
      pow = pow * closedT;
      if (j + 1 >= prof_len && pow.cwiseAbs().maxCoeff() * (M.cwiseAbs().maxCoeff() *
          (wm.cwiseAbs().maxCoeff() + 1.0)) < 1e-18)
        break;
    }
    const Vector rhs = p.K.transpose() * zhat[0] +
                       beta * B.transpose() * (M * (A * x + C * zhat[0] + wm)) +
                       beta * B.transpose() * n_acc;
    const Vector u_direct = -S_fact.solve(rhs);

    Vector u_strategy = gains.F * x + gains.H;
    for (int n = 0; n < prof_len && n < static_cast<int>(gains.G.size()); ++n)
      u_strategy += gains.G[static_cast<size_t>(n)] * zhat[static_cast<size_t>(n)];

    const double dev = (u_direct - u_strategy).cwiseAbs().maxCoeff();
    stats.max_dev = std::max(stats.max_dev, dev);
    stats.mean_dev += dev;
  }
  if (samples > 0) stats.mean_dev /= samples;
  return stats;
}

}  // namespace sebeu
