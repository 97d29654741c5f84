#include "sebeu/env_fixed_point.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace sebeu {

namespace {

// Shared assembly of one stage given the per-player gain pieces at that
// stage. gain_F/gain_G/gain_H index players; gain_G[i][j] couples player i to
// the j-th prediction slot.
AggregatedStage assemble_stage(const GameSpec& spec, const DimensionTable& dims,
                               int t, int slots,
                               const std::vector<const Matrix*>& F,
                               const std::vector<std::vector<const Matrix*>>& G,
                               const std::vector<const Vector*>& H) {
  const int N = spec.num_players();
  const EnvironmentSpec& env = spec.environment;
  AggregatedStage st;
  st.D.setZero(dims.n_y, dims.x_dim);
  st.A.setZero(dims.x_dim, dims.x_dim);
  st.C.setZero(dims.x_dim, dims.n_y);
  st.Hp.setZero(dims.n_y);
  st.HX.setZero(dims.x_dim);
  st.Gp.assign(static_cast<size_t>(slots), Matrix::Zero(dims.n_y, dims.n_y));
  st.GX.assign(static_cast<size_t>(slots), Matrix::Zero(dims.x_dim, dims.n_y));

  if (dims.env_dim > 0) {
    st.D.leftCols(dims.env_dim) = env.D_at(t);
    st.A.topLeftCorner(dims.env_dim, dims.env_dim) = env.A0_at(t);
  }
  for (int i = 0; i < N; ++i) {
    const PlayerSpec& p = spec.players[static_cast<size_t>(i)];
    const int xo = dims.x_offset[static_cast<size_t>(i)];
    const int nx = dims.player_x[static_cast<size_t>(i)];
    const Matrix& E1 = env.E1_at(t, i);
    const Matrix& E2 = env.E2_at(t, i);
    const Matrix& B1 = env.B1_at(t, i);
    const Matrix& B2 = env.B2_at(t, i);
    const Matrix& Fi = *F[static_cast<size_t>(i)];
    const Vector& Hi = *H[static_cast<size_t>(i)];

    st.D.middleCols(xo, nx) += E1 * Fi + E2;
    st.Hp += E1 * Hi;
    if (dims.env_dim > 0) {
      st.A.block(0, xo, dims.env_dim, nx) += B1 * Fi + B2;
      st.HX.head(dims.env_dim) += B1 * Hi;
    }
    st.A.block(xo, xo, nx, nx) = p.A_at(t) + p.B_at(t) * Fi;
    st.HX.segment(xo, nx) = p.B_at(t) * Hi;
    st.C.middleRows(xo, nx) = p.C_at(t);
    for (int j = 0; j < slots; ++j) {
      const Matrix& Gij = *G[static_cast<size_t>(i)][static_cast<size_t>(j)];
      st.Gp[static_cast<size_t>(j)] += E1 * Gij;
      if (dims.env_dim > 0)
        st.GX[static_cast<size_t>(j)].topRows(dims.env_dim) += B1 * Gij;
      st.GX[static_cast<size_t>(j)].middleRows(xo, nx) += p.B_at(t) * Gij;
    }
  }
  return st;
}

double smallest_singular_value(const Matrix& M) {
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues().minCoeff();
}

}  // namespace

AggregatedDynamics aggregate(const GameSpec& spec,
                             const std::vector<FiniteGainSchedule>& gains) {
  if (spec.horizon.infinite)
    throw Error("aggregate: finite gain schedules on an infinite-horizon spec");
  const int N = spec.num_players();
  if (static_cast<int>(gains.size()) != N)
    throw Error("aggregate: one gain schedule per player required");
  const int T = spec.horizon.T;

  AggregatedDynamics agg;
  agg.dims = stack_dimensions(spec);
  agg.infinite = false;
  agg.noise = spec.noise;
  agg.stages.reserve(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    const int slots = T - t;
    std::vector<const Matrix*> F(static_cast<size_t>(N));
    std::vector<std::vector<const Matrix*>> G(static_cast<size_t>(N));
    std::vector<const Vector*> H(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) {
      const FiniteGainSchedule& g = gains[static_cast<size_t>(i)];
      F[static_cast<size_t>(i)] = &g.F[static_cast<size_t>(t)];
      H[static_cast<size_t>(i)] = &g.H[static_cast<size_t>(t)];
      G[static_cast<size_t>(i)].resize(static_cast<size_t>(slots));
      for (int j = 0; j < slots; ++j)
        G[static_cast<size_t>(i)][static_cast<size_t>(j)] =
            &g.G[static_cast<size_t>(t)][static_cast<size_t>(j)];
    }
    agg.stages.push_back(assemble_stage(spec, agg.dims, t, slots, F, G, H));
  }
  return agg;
}

AggregatedDynamics aggregate(const GameSpec& spec,
                             const std::vector<StationaryGains>& gains) {
  if (!spec.horizon.infinite)
    throw Error("aggregate: stationary gains on a finite-horizon spec");
  const int N = spec.num_players();
  if (static_cast<int>(gains.size()) != N)
    throw Error("aggregate: one gain schedule per player required");

  AggregatedDynamics agg;
  agg.dims = stack_dimensions(spec);
  agg.infinite = true;
  agg.noise = spec.noise;

  int slots = 0;
  for (const auto& g : gains)
    slots = std::max(slots, static_cast<int>(g.G.size()));
  std::vector<const Matrix*> F(static_cast<size_t>(N));
  std::vector<std::vector<const Matrix*>> G(static_cast<size_t>(N));
  std::vector<const Vector*> H(static_cast<size_t>(N));
  // Players whose series truncates earlier contribute zero beyond their tail.
  std::vector<Matrix> zero_pad(static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) {
    const StationaryGains& g = gains[static_cast<size_t>(i)];
    F[static_cast<size_t>(i)] = &g.F;
    H[static_cast<size_t>(i)] = &g.H;
    zero_pad[static_cast<size_t>(i)] =
        Matrix::Zero(spec.players[static_cast<size_t>(i)].nu(), agg.dims.n_y);
    G[static_cast<size_t>(i)].resize(static_cast<size_t>(slots));
    for (int j = 0; j < slots; ++j)
      G[static_cast<size_t>(i)][static_cast<size_t>(j)] =
          j < static_cast<int>(g.G.size()) ? &g.G[static_cast<size_t>(j)]
                                           : &zero_pad[static_cast<size_t>(i)];
  }
  agg.stages.push_back(assemble_stage(spec, agg.dims, 0, slots, F, G, H));
  return agg;
}

Vector EnvFixedPoint::predict(int k, int target, const Vector& Xhat) const {
  if (infinite) {
    const int n = target - k;
    if (n >= static_cast<int>(a_lag.size())) return y_inf;
    return a_lag[static_cast<size_t>(n)] * Xhat + b_lag[static_cast<size_t>(n)];
  }
  return a[static_cast<size_t>(k)][static_cast<size_t>(target - k)] * Xhat +
         b[static_cast<size_t>(k)][static_cast<size_t>(target - k)];
}

EnvFixedPoint solve_finite(const AggregatedDynamics& agg, const Tolerances& tol) {
  if (agg.infinite) throw Error("solve_finite: infinite-horizon aggregate");
  const int T = agg.T();
  const int ny = agg.dims.n_y;
  const int nx = agg.dims.x_dim;

  EnvFixedPoint fp;
  fp.infinite = false;
  fp.a.resize(static_cast<size_t>(T));
  fp.b.resize(static_cast<size_t>(T));
  fp.sigma_min.resize(static_cast<size_t>(T));
  fp.cond.resize(static_cast<size_t>(T));

  for (int k = 0; k < T; ++k) {
    const int m = T - k;           // number of unknown predictions
    const int dim = m * ny;
    Matrix Lambda = Matrix::Zero(dim, dim);
    Matrix rhs = Matrix::Zero(dim, nx + 1);  // [linear in Xhat | constant]

    // Forward affine representation of Xhat_t in terms of (Xhat_k, yhat stack).
    Matrix P = Matrix::Identity(nx, nx);
    Matrix Qy = Matrix::Zero(nx, dim);
    Vector r = Vector::Zero(nx);
    for (int t = k; t < T; ++t) {
      const AggregatedStage& st = agg.at(t);
      const int row = (t - k) * ny;
      // yhat_t = D Xhat_t + sum_{n>=t} Gp yhat_n + Hp + xi_mean
      Lambda.middleRows(row, ny) = st.D * Qy;
      for (int n = t; n < T; ++n)
        Lambda.block(row, (n - k) * ny, ny, ny) +=
            st.Gp[static_cast<size_t>(n - t)];
      rhs.block(row, 0, ny, nx) = st.D * P;
      rhs.block(row, nx, ny, 1) = st.D * r + st.Hp + agg.noise.xi_mean_at(t);

      if (t + 1 < T) {
        Matrix Qn = st.A * Qy;
        for (int n = t; n < T; ++n)
          Qn.middleCols((n - k) * ny, ny) += st.GX[static_cast<size_t>(n - t)];
        Qn.middleCols((t - k) * ny, ny) += st.C;
        r = st.A * r + st.HX + agg.noise.w_mean_at(t);
        P = st.A * P;
        Qy = std::move(Qn);
      }
    }

    const Matrix system = Matrix::Identity(dim, dim) - Lambda;
    Eigen::JacobiSVD<Matrix> svd(system);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    const double cond = smin > 0.0 ? smax / smin
                                   : std::numeric_limits<double>::infinity();
    fp.sigma_min[static_cast<size_t>(k)] = smin;
    fp.cond[static_cast<size_t>(k)] = cond;
    if (!(smin > 0.0) || cond > tol.fp_cond_cap) {
      std::ostringstream os;
      os << "environment fixed-point system at k=" << k
         << " cannot be certified uniquely solvable (cond=" << cond
         << ", sigma_min=" << smin << ")";
      throw FixedPointError(os.str());
    }
    const Matrix sol = system.partialPivLu().solve(rhs);
    fp.a[static_cast<size_t>(k)].resize(static_cast<size_t>(m));
    fp.b[static_cast<size_t>(k)].resize(static_cast<size_t>(m));
    for (int t = k; t < T; ++t) {
      fp.a[static_cast<size_t>(k)][static_cast<size_t>(t - k)] =
          sol.block((t - k) * ny, 0, ny, nx);
      fp.b[static_cast<size_t>(k)][static_cast<size_t>(t - k)] =
          sol.block((t - k) * ny, nx, ny, 1);
    }
  }
  return fp;
}

namespace {

struct TruncatedSolution {
  std::vector<Matrix> a;
  std::vector<Vector> b;
  double sigma_min = 0.0;
  double cond = 0.0;
};

// Truncated stationary system over t in [0, T_trunc) with the tail pinned at
// yhat_t = y_inf for t >= T_trunc.
TruncatedSolution solve_truncated(const AggregatedDynamics& agg,
                                  const Vector& x0_mean, const Vector& y_inf,
                                  int T_trunc, const Tolerances& tol) {
  const AggregatedStage& st = agg.at(0);
  const int ny = agg.dims.n_y;
  const int nx = agg.dims.x_dim;
  const int lags = static_cast<int>(st.Gp.size());
  const int dim = T_trunc * ny;
  if (dim > tol.fp_max_dense_dim) {
    std::ostringstream os;
    os << "truncated stationary system dimension " << dim
       << " exceeds the dense-solve cap " << tol.fp_max_dense_dim;
    throw FixedPointError(os.str());
  }
  const Vector xi_mean = agg.noise.xi_mean_at(0);
  const Vector w_mean = agg.noise.w_mean_at(0);

  Matrix Lambda = Matrix::Zero(dim, dim);
  Matrix rhs = Matrix::Zero(dim, nx + 1);

  Matrix P = Matrix::Identity(nx, nx);
  Matrix Qy = Matrix::Zero(nx, dim);
  Vector r = Vector::Zero(nx);
  for (int t = 0; t < T_trunc; ++t) {
    const int row = t * ny;
    Lambda.middleRows(row, ny) = st.D * Qy;
    Vector tail = Vector::Zero(ny);
    for (int n = 0; n < lags; ++n) {
      if (t + n < T_trunc)
        Lambda.block(row, (t + n) * ny, ny, ny) += st.Gp[static_cast<size_t>(n)];
      else
        tail += st.Gp[static_cast<size_t>(n)] * y_inf;
    }
    rhs.block(row, 0, ny, nx) = st.D * P;
    rhs.block(row, nx, ny, 1) = st.D * r + st.Hp + xi_mean + tail;

    if (t + 1 < T_trunc) {
      Matrix Qn = st.A * Qy;
      Vector xtail = Vector::Zero(nx);
      for (int n = 0; n < lags; ++n) {
        if (t + n < T_trunc)
          Qn.middleCols((t + n) * ny, ny) += st.GX[static_cast<size_t>(n)];
        else
          xtail += st.GX[static_cast<size_t>(n)] * y_inf;
      }
      Qn.middleCols(t * ny, ny) += st.C;
      r = st.A * r + st.HX + w_mean + xtail;
      P = st.A * P;
      Qy = std::move(Qn);
    }
  }

  const Matrix system = Matrix::Identity(dim, dim) - Lambda;
  TruncatedSolution out;
  if (dim <= 512) {
    Eigen::JacobiSVD<Matrix> svd(system);
    out.sigma_min = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    out.cond = out.sigma_min > 0.0 ? smax / out.sigma_min
                                   : std::numeric_limits<double>::infinity();
  }
  Eigen::PartialPivLU<Matrix> lu(system);
  if (dim > 512) {
    const double rcond = lu.rcond();
    out.cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    out.sigma_min = system.cwiseAbs().rowwise().sum().maxCoeff() / out.cond;
  }
  if (!(out.sigma_min > 0.0) || out.cond > tol.fp_cond_cap) {
    std::ostringstream os;
    os << "truncated stationary system (T_trunc=" << T_trunc
       << ") cannot be certified uniquely solvable (cond=" << out.cond << ")";
    throw FixedPointError(os.str());
  }
  const Matrix sol = lu.solve(rhs);
  out.a.resize(static_cast<size_t>(T_trunc));
  out.b.resize(static_cast<size_t>(T_trunc));
  for (int t = 0; t < T_trunc; ++t) {
    out.a[static_cast<size_t>(t)] = sol.block(t * ny, 0, ny, nx);
    out.b[static_cast<size_t>(t)] = sol.block(t * ny, nx, ny, 1);
  }
  (void)x0_mean;
  return out;
}

}  // namespace

EnvFixedPoint solve_infinite(const AggregatedDynamics& agg,
                             const Vector& x0_mean, const Tolerances& tol) {
  if (!agg.infinite) throw Error("solve_infinite: finite-horizon aggregate");
  const AggregatedStage& st = agg.at(0);
  const int ny = agg.dims.n_y;
  const int nx = agg.dims.x_dim;
  const int lags = static_cast<int>(st.Gp.size());

  // Stationary mean fixed point (drop the time indices): the tail boundary
  // condition of the truncated solve.
  Matrix Gp_sum = Matrix::Zero(ny, ny);
  Matrix GX_sum = Matrix::Zero(nx, ny);
  for (int n = 0; n < lags; ++n) {
    Gp_sum += st.Gp[static_cast<size_t>(n)];
    GX_sum += st.GX[static_cast<size_t>(n)];
  }
  Matrix block(ny + nx, ny + nx);
  block.topLeftCorner(ny, ny) = Matrix::Identity(ny, ny) - Gp_sum;
  block.topRightCorner(ny, nx) = -st.D;
  block.bottomLeftCorner(nx, ny) = -(GX_sum + st.C);
  block.bottomRightCorner(nx, nx) = Matrix::Identity(nx, nx) - st.A;
  Vector rhs(ny + nx);
  rhs.head(ny) = st.Hp + agg.noise.xi_mean_at(0);
  rhs.tail(nx) = st.HX + agg.noise.w_mean_at(0);

  Eigen::JacobiSVD<Matrix> svd(block);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (!(smin > 0.0) || smax / smin > tol.fp_cond_cap) {
    std::ostringstream os;
    os << "stationary mean fixed point singular or ill-conditioned (cond="
       << (smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity())
       << "); uniform boundedness of the coefficient families cannot be certified";
    throw FixedPointError(os.str());
  }
  const Vector stat = block.partialPivLu().solve(rhs);

  EnvFixedPoint fp;
  fp.infinite = true;
  fp.y_inf = stat.head(ny);
  fp.X_inf = stat.tail(nx);

  int T_trunc = tol.fp_initial_trunc;
  TruncatedSolution cur = solve_truncated(agg, x0_mean, fp.y_inf, T_trunc, tol);
  double delta = std::numeric_limits<double>::infinity();
  int doublings = 0;
  for (; doublings < tol.fp_max_doublings; ++doublings) {
    TruncatedSolution next;
    try {
      next = solve_truncated(agg, x0_mean, fp.y_inf, 2 * T_trunc, tol);
    } catch (const FixedPointError&) {
      if (delta < tol.fp_delta) break;  // converged before hitting the cap
      throw;
    }
    delta = (next.a[0] - cur.a[0]).cwiseAbs().maxCoeff() +
            (next.b[0] - cur.b[0]).cwiseAbs().maxCoeff();
    T_trunc *= 2;
    cur = std::move(next);
    if (delta < tol.fp_delta) break;
  }
  if (!(delta < tol.fp_delta)) {
    std::ostringstream os;
    os << "truncated stationary solves did not converge (last delta " << delta
       << " after " << doublings << " doublings, T_trunc=" << T_trunc << ")";
    throw FixedPointError(os.str());
  }

  fp.a_lag = std::move(cur.a);
  fp.b_lag = std::move(cur.b);
  fp.T_trunc = T_trunc;
  fp.doublings = doublings;
  fp.last_delta = delta;
  fp.sigma_min.push_back(cur.sigma_min);
  fp.cond.push_back(cur.cond);
  return fp;
}

MeanFieldPoint solve_meanfield(const GameSpec& spec, const StationaryGains& gains,
                               const Tolerances& tol) {
  if (!spec.mean_field)
    throw Error("solve_meanfield: spec is not a mean-field model");
  const PlayerSpec& p = spec.players[0];
  const Matrix& E1 = spec.environment.E1[0];
  const Matrix& E2 = spec.environment.E2[0];
  const int ny = spec.environment.ny();
  const int nx = p.nx();

  Matrix G_total = Matrix::Zero(p.nu(), ny);
  for (const auto& Gn : gains.G) G_total += Gn;

  // [ I - E1 G      -(E1 F + E2) ] [y0]   [E1 H + xi_mean]
  // [ -B G           I - (A+BF)  ] [x0] = [B H + w_mean  ]
  Matrix block(ny + nx, ny + nx);
  block.topLeftCorner(ny, ny) = Matrix::Identity(ny, ny) - E1 * G_total;
  block.topRightCorner(ny, nx) = -(E1 * gains.F + E2);
  block.bottomLeftCorner(nx, ny) = -p.B * G_total;
  block.bottomRightCorner(nx, nx) =
      Matrix::Identity(nx, nx) - (p.A + p.B * gains.F);

  const DimensionTable dims = stack_dimensions(spec);
  const Vector w_mean = spec.noise.w_mean.segment(dims.x_offset[0], nx);
  Vector rhs(ny + nx);
  rhs.head(ny) = E1 * gains.H + spec.noise.xi_mean;
  rhs.tail(nx) = p.B * gains.H + w_mean;

  const double smin = smallest_singular_value(block);
  if (!(smin > 0.0)) {
    throw FixedPointError(
        "mean-field stationary system is singular: no equilibrium mean exists "
        "for this data");
  }
  Eigen::JacobiSVD<Matrix> svd(block);
  const double cond = svd.singularValues().maxCoeff() / smin;
  if (cond > tol.fp_cond_cap) {
    std::ostringstream os;
    os << "mean-field stationary system ill-conditioned (cond=" << cond << ")";
    throw FixedPointError(os.str());
  }

  MeanFieldPoint mf;
  const Vector sol = block.partialPivLu().solve(rhs);
  mf.y0 = sol.head(ny);
  mf.x0 = sol.tail(nx);
  mf.cond = cond;
  mf.residual = (block * sol - rhs).cwiseAbs().maxCoeff();
  return mf;
}

}  // namespace sebeu
