#include "sebeu/estimator.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace sebeu {

ClosedLoopModel make_closed_loop(const AggregatedDynamics& agg,
                                 const EnvFixedPoint& fp) {
  if (agg.infinite != fp.infinite)
    throw Error("make_closed_loop: horizon mode mismatch");
  ClosedLoopModel model;
  model.dims = agg.dims;
  model.infinite = agg.infinite;
  model.x0_mean = agg.noise.x0_mean;
  model.x0_cov = agg.noise.x0_cov;

  const int ny = agg.dims.n_y;
  const int nx = agg.dims.x_dim;
  const int T = agg.T();
  model.stages.reserve(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    const AggregatedStage& st = agg.stages[static_cast<size_t>(t)];
    ClosedLoopStage cs;
    cs.A = st.A;
    cs.C = st.C;
    cs.D = st.D;
    cs.Hp = st.Hp;
    cs.HX = st.HX;
    cs.Gp = Matrix::Zero(ny, nx);
    cs.GX = Matrix::Zero(nx, nx);
    const int lags = static_cast<int>(st.Gp.size());
    if (agg.infinite) {
      const int avail = static_cast<int>(fp.a_lag.size());
      for (int n = 0; n < lags; ++n) {
        if (n < avail) {
          cs.Gp += st.Gp[static_cast<size_t>(n)] * fp.a_lag[static_cast<size_t>(n)];
          cs.GX += st.GX[static_cast<size_t>(n)] * fp.a_lag[static_cast<size_t>(n)];
          cs.Hp += st.Gp[static_cast<size_t>(n)] * fp.b_lag[static_cast<size_t>(n)];
          cs.HX += st.GX[static_cast<size_t>(n)] * fp.b_lag[static_cast<size_t>(n)];
        } else {
          cs.Hp += st.Gp[static_cast<size_t>(n)] * fp.y_inf;
          cs.HX += st.GX[static_cast<size_t>(n)] * fp.y_inf;
        }
      }
    } else {
      for (int n = 0; n < lags; ++n) {
        const Matrix& a = fp.a[static_cast<size_t>(t)][static_cast<size_t>(n)];
        const Vector& b = fp.b[static_cast<size_t>(t)][static_cast<size_t>(n)];
        cs.Gp += st.Gp[static_cast<size_t>(n)] * a;
        cs.GX += st.GX[static_cast<size_t>(n)] * a;
        cs.Hp += st.Gp[static_cast<size_t>(n)] * b;
        cs.HX += st.GX[static_cast<size_t>(n)] * b;
      }
    }
    cs.xi_mean = agg.noise.xi_mean_at(t);
    cs.xi_cov = agg.noise.xi_cov_at(t);
    cs.W_mean = agg.noise.w_mean_at(t);
    cs.W_cov = agg.noise.w_cov_at(t);
    model.stages.push_back(std::move(cs));
  }
  return model;
}

FilterState initial_filter_state(const ClosedLoopModel& model) {
  FilterState s;
  s.x_hat = model.x0_mean;
  s.cov = symmetrize(model.x0_cov);
  return s;
}

namespace {

Eigen::LDLT<Matrix> innovation_factor(const Matrix& S, int t,
                                      const Tolerances& tol) {
  Eigen::JacobiSVD<Matrix> svd(S);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (!(smin > 0.0) || smax / smin > tol.innovation_cond_cap) {
    std::ostringstream os;
    os << "innovation covariance singular at stage " << t;
    throw EstimatorError(os.str());
  }
  return Eigen::LDLT<Matrix>(S);
}

}  // namespace

FilterState filter_step(const ClosedLoopModel& model, const FilterState& state,
                        const Vector& y, int t, const Tolerances& tol) {
  const ClosedLoopStage& st = model.at(t);
  const Matrix& Sigma = state.cov;
  const Matrix DSigma = st.D * Sigma;                      // n_y x nx
  const Matrix S = symmetrize(DSigma * st.D.transpose() + st.xi_cov);
  auto S_fact = innovation_factor(S, t, tol);

  FilterState next;
  next.innovation_cov = S;
  next.gain = st.A * DSigma.transpose() * S_fact.solve(
                  Matrix::Identity(S.rows(), S.cols()));
  const Vector innovation =
      y - (st.D + st.Gp) * state.x_hat - st.Hp - st.xi_mean;
  next.x_hat = st.A * state.x_hat + st.GX * state.x_hat + st.HX + st.C * y +
               st.W_mean + next.gain * innovation;
  next.cov = symmetrize(
      st.A * (Sigma - DSigma.transpose() * S_fact.solve(DSigma)) *
          st.A.transpose() +
      st.W_cov);
  return next;
}

Matrix steady_state_covariance(const ClosedLoopModel& model,
                               const Tolerances& tol) {
  if (!model.infinite)
    throw EstimatorError("steady_state_covariance requires a time-invariant model");
  const ClosedLoopStage& st = model.at(0);
  Matrix Sigma = symmetrize(model.x0_cov);
  for (int it = 0; it < tol.ss_max_iter; ++it) {
    const Matrix DSigma = st.D * Sigma;
    const Matrix S = symmetrize(DSigma * st.D.transpose() + st.xi_cov);
    auto S_fact = innovation_factor(S, it, tol);
    const Matrix next = symmetrize(
        st.A * (Sigma - DSigma.transpose() * S_fact.solve(DSigma)) *
            st.A.transpose() +
        st.W_cov);
    const double delta = (next - Sigma).cwiseAbs().maxCoeff();
    Sigma = next;
    if (Sigma.trace() > tol.cov_divergence_trace) {
      throw EstimatorError(
          "covariance iteration diverged: the interconnected closed loop is "
          "unstable (couplings too large for a stationary filter)");
    }
    if (delta < tol.ss_delta) {
      // Residual certificate against the stationary equation.
      const Matrix DS = st.D * Sigma;
      const Matrix Sres = symmetrize(DS * st.D.transpose() + st.xi_cov);
      const Matrix rhs = symmetrize(
          st.A * (Sigma - DS.transpose() * Sres.ldlt().solve(DS)) *
              st.A.transpose() +
          st.W_cov);
      const double residual = (Sigma - rhs).cwiseAbs().maxCoeff();
      if (residual > tol.ss_residual) {
        std::ostringstream os;
        os << "steady-state covariance residual " << residual
           << " exceeds tolerance " << tol.ss_residual;
        throw EstimatorError(os.str());
      }
      return Sigma;
    }
  }
  throw EstimatorError(
      "steady-state covariance iteration did not converge; see the weak "
      "coupling requirements for stationary equilibria");
}

MomentTrajectory moment_propagation(const ClosedLoopModel& model, int horizon,
                                    const Tolerances& tol) {
  if (horizon < 1) throw Error("moment_propagation: horizon must be >= 1");
  const int nx = model.dims.x_dim;
  const int ny = model.dims.n_y;

  // Augmented state Z_t = (Xbar_t, Xhat_t). The Kalman gain K_t is a
  // deterministic sequence, so Z evolves linearly driven by (W_t, xi_t):
  //   Xbar+ = (A + C D) Xbar + (GX + C Gp) Xhat + (HX + C Hp) + C xi + W
  //   Xhat+ = (K + C) D Xbar + (A + GX + C Gp - K D) Xhat
  //           + (HX + C Hp + W_mean - K xi_mean ... ) + (C + K) xi
  MomentTrajectory out;
  out.X_mean.reserve(static_cast<size_t>(horizon) + 1);
  out.X_cov.reserve(static_cast<size_t>(horizon) + 1);
  out.y_mean.reserve(static_cast<size_t>(horizon));
  out.y_cov.reserve(static_cast<size_t>(horizon));

  Vector m(2 * nx);
  m.head(nx) = model.x0_mean;
  m.tail(nx) = model.x0_mean;
  Matrix P = Matrix::Zero(2 * nx, 2 * nx);
  P.topLeftCorner(nx, nx) = symmetrize(model.x0_cov);

  FilterState fs = initial_filter_state(model);

  for (int t = 0; t <= horizon; ++t) {
    out.aug_mean.push_back(m);
    out.X_mean.push_back(m.head(nx));
    out.X_cov.push_back(symmetrize(P.topLeftCorner(nx, nx)));
    if (t == horizon) break;

    const ClosedLoopStage& st = model.at(t);
    // y_t moments: y = D Xbar + Gp Xhat + Hp + xi
    Matrix obs(ny, 2 * nx);
    obs.leftCols(nx) = st.D;
    obs.rightCols(nx) = st.Gp;
    out.y_mean.push_back(obs * m + st.Hp + st.xi_mean);
    out.y_cov.push_back(symmetrize(obs * P * obs.transpose() + st.xi_cov));

    // Kalman gain for this stage from the exact filter covariance.
    const Matrix DSigma = st.D * fs.cov;
    const Matrix S = symmetrize(DSigma * st.D.transpose() + st.xi_cov);
    auto S_fact = innovation_factor(S, t, tol);
    const Matrix K = st.A * DSigma.transpose() *
                     S_fact.solve(Matrix::Identity(ny, ny));

    Matrix Tmat(2 * nx, 2 * nx);
    Tmat.topLeftCorner(nx, nx) = st.A + st.C * st.D;
    Tmat.topRightCorner(nx, nx) = st.GX + st.C * st.Gp;
    Tmat.bottomLeftCorner(nx, nx) = (st.C + K) * st.D;
    Tmat.bottomRightCorner(nx, nx) =
        st.A + st.GX + st.C * st.Gp - K * st.D;

    // Both rows share the same constant: the K-terms cancel at the mean.
    Vector c(2 * nx);
    c.head(nx) = st.HX + st.C * (st.Hp + st.xi_mean) + st.W_mean;
    c.tail(nx) = c.head(nx);

    // Noise map N: columns (W, xi) -> (Xbar+, Xhat+) deviations.
    Matrix N(2 * nx, nx + ny);
    N.setZero();
    N.topLeftCorner(nx, nx) = Matrix::Identity(nx, nx);
    N.block(0, nx, nx, ny) = st.C;
    N.block(nx, nx, nx, ny) = st.C + K;

    Matrix noise_cov = Matrix::Zero(nx + ny, nx + ny);
    noise_cov.topLeftCorner(nx, nx) = st.W_cov;
    noise_cov.bottomRightCorner(ny, ny) = st.xi_cov;

    m = Tmat * m + c;
    P = symmetrize(Tmat * P * Tmat.transpose() +
                   N * noise_cov * N.transpose());

    // Advance the exact filter covariance for the next stage's gain.
    fs.cov = symmetrize(
        st.A * (fs.cov - DSigma.transpose() * S_fact.solve(DSigma)) *
            st.A.transpose() +
        st.W_cov);
  }
  return out;
}

}  // namespace sebeu
