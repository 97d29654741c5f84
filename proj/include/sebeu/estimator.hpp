#pragma once

#include "sebeu/common.hpp"
#include "sebeu/env_fixed_point.hpp"

#include <vector>

namespace sebeu {

// Closed-form coefficients of the candidate equilibrium environment process:
//   y_t   = D Xbar_t + Gp Xhat_t + Hp_check + xi_t
//   Xbar_{t+1} = A Xbar_t + GX Xhat_t + HX_check + C y_t + W_t
// where Xhat_t = E[Xbar_t | y_0..y_{t-1}] and the Gp/GX columns act on the
// estimate (the prediction sums folded through the affine coefficients).
struct ClosedLoopStage {
  Matrix A, C, D;
  Matrix Gp;   // n_y x x_dim
  Matrix GX;   // x_dim x x_dim
  Vector Hp;   // n_y
  Vector HX;   // x_dim
  Vector xi_mean, W_mean;
  Matrix xi_cov, W_cov;
};

struct ClosedLoopModel {
  DimensionTable dims;
  bool infinite = false;
  std::vector<ClosedLoopStage> stages;  // finite: T entries; infinite: one
  Vector x0_mean;
  Matrix x0_cov;

  int T() const { return static_cast<int>(stages.size()); }
  const ClosedLoopStage& at(int t) const {
    return infinite ? stages[0] : stages[static_cast<size_t>(t)];
  }
};

ClosedLoopModel make_closed_loop(const AggregatedDynamics& agg,
                                 const EnvFixedPoint& fp);

struct FilterState {
  Vector x_hat;          // predicted mean of Xbar_t given y_0..y_{t-1}
  Matrix cov;            // prediction covariance
  Matrix innovation_cov; // from the most recent step
  Matrix gain;           // Kalman gain of the most recent step
};

FilterState initial_filter_state(const ClosedLoopModel& model);

// One predict step: consumes the realized y_t, returns the state for t+1.
FilterState filter_step(const ClosedLoopModel& model, const FilterState& state,
                        const Vector& y, int t, const Tolerances& tol = {});

// Fixed point of the covariance recursion for the time-invariant model.
Matrix steady_state_covariance(const ClosedLoopModel& model,
                               const Tolerances& tol = {});

// Exact first and second moments of (Xbar_t, y_t) under the closed loop,
// obtained from the augmented linear recursion on (Xbar, Xhat).
struct MomentTrajectory {
  std::vector<Vector> X_mean;
  std::vector<Matrix> X_cov;
  std::vector<Vector> y_mean;
  std::vector<Matrix> y_cov;
  // Augmented mean path (Xbar, Xhat), exposed for the estimator consistency
  // checks.
  std::vector<Vector> aug_mean;
};

MomentTrajectory moment_propagation(const ClosedLoopModel& model, int horizon,
                                    const Tolerances& tol = {});

}  // namespace sebeu
