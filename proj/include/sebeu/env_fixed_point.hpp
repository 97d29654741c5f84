#pragma once

#include "sebeu/common.hpp"
#include "sebeu/game_model.hpp"
#include "sebeu/lq_synthesis.hpp"

#include <vector>

namespace sebeu {

// One stage of the vector-form closed-loop coefficients:
//   y_t   = D X_t + sum_n Gp[n] yhat_n + Hp + xi_t
//   X_t+1 = A X_t + sum_n GX[n] yhat_n + HX + C y_t + W_t
// In the finite case Gp[j] couples to the prediction of y_{t+j}; in the
// infinite case the index is the lag n. xi means stay out of Hp (the solvers
// and the filter add them explicitly).
struct AggregatedStage {
  Matrix D;   // n_y x x_dim
  Matrix A;   // x_dim x x_dim
  Matrix C;   // x_dim x n_y
  std::vector<Matrix> Gp;  // n_y x n_y each
  std::vector<Matrix> GX;  // x_dim x n_y each
  Vector Hp;  // n_y
  Vector HX;  // x_dim
};

struct AggregatedDynamics {
  DimensionTable dims;
  bool infinite = false;
  std::vector<AggregatedStage> stages;  // finite: T entries; infinite: one
  NoiseSpec noise;                      // moments carried along for the solvers

  int T() const { return static_cast<int>(stages.size()); }
  const AggregatedStage& at(int t) const {
    return infinite ? stages[0] : stages[static_cast<size_t>(t)];
  }
};

AggregatedDynamics aggregate(const GameSpec& spec,
                             const std::vector<FiniteGainSchedule>& gains);
AggregatedDynamics aggregate(const GameSpec& spec,
                             const std::vector<StationaryGains>& gains);

// Affine coefficients of the equilibrium conditional means. Finite case:
// E[y_t | Y_{k-1}] = a[k][t-k] Xhat + b[k][t-k] for 0 <= k <= t < T.
// Infinite case: E[y_{k+n} | Y_{k-1}] = a_lag[n] Xhat + b_lag[n], constant
// tail (0, y_inf) beyond the computed truncation.
struct EnvFixedPoint {
  bool infinite = false;

  // finite
  std::vector<std::vector<Matrix>> a;
  std::vector<std::vector<Vector>> b;
  std::vector<double> sigma_min;  // per k
  std::vector<double> cond;       // per k

  // infinite
  std::vector<Matrix> a_lag;
  std::vector<Vector> b_lag;
  Vector y_inf, X_inf;
  int T_trunc = 0;
  int doublings = 0;
  double last_delta = 0.0;

  // Prediction of y_{target} given information at time k with state estimate
  // Xhat; unavailable infinite-horizon lags fall back to the stationary tail.
  Vector predict(int k, int target, const Vector& Xhat) const;
};

EnvFixedPoint solve_finite(const AggregatedDynamics& agg,
                           const Tolerances& tol = {});
EnvFixedPoint solve_infinite(const AggregatedDynamics& agg,
                             const Vector& x0_mean, const Tolerances& tol = {});

struct MeanFieldPoint {
  Vector y0;  // stationary environment mean
  Vector x0;  // stationary representative-player state mean
  double residual = 0.0;
  double cond = 0.0;
};

// Two-block stationary mean system of the countable identical-player case.
MeanFieldPoint solve_meanfield(const GameSpec& spec, const StationaryGains& gains,
                               const Tolerances& tol = {});

}  // namespace sebeu
