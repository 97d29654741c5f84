#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sebeu {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Base class for all hard failures raised by the pipeline. Validation does
// not throw; it reports (see game_model.hpp).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Scenario/config parse problems (CLI exit code 2).
class InputError : public Error {
 public:
  using Error::Error;
};

// Gain synthesis failed (singular S_k, Riccati non-convergence, unstable loop).
class SynthesisError : public Error {
 public:
  using Error::Error;
};

// Equilibrium fixed-point system not uniquely solvable (Assumption on the
// environment equations cannot be certified).
class FixedPointError : public Error {
 public:
  using Error::Error;
};

// Filter failures: singular innovation covariance, covariance divergence.
class EstimatorError : public Error {
 public:
  using Error::Error;
};

// Monte Carlo failures: state overflow, unsupported noise family.
class SimulationError : public Error {
 public:
  using Error::Error;
};

// Every numeric threshold used anywhere in the pipeline, with its default.
// The CLI surfaces each of these as a --tol.* flag and echoes overrides into
// the run manifest.
struct Tolerances {
  // game_model
  double pd_tol = 1e-10;        // smallest eigenvalue for positive definiteness
  double psd_tol = 1e-10;       // covariances may dip this far below zero
  double stability_margin = 0.0;  // spectral radius of A0 must be < 1 - margin

  // lq_synthesis
  double s_cond_cap = 1e12;       // condition cap on S_k before declaring failure
  double are_delta = 1e-12;       // sup-norm step tolerance for the ARE iteration
  int are_max_iter = 100000;
  double are_residual = 1e-10;    // residual of M in the algebraic Riccati equation
  double g_tail_rel = 1e-12;      // relative truncation threshold for the G_n series
  int g_tail_max = 100000;

  // env_fixed_point
  double fp_cond_cap = 1e10;      // condition cap on (I - Lambda_k)
  double fp_delta = 1e-8;         // a_0/b_0 change across truncation doublings
  int fp_initial_trunc = 64;
  int fp_max_doublings = 10;
  int fp_max_dense_dim = 8192;    // hard cap on the dense truncated system size

  // estimator
  double innovation_cond_cap = 1e12;
  double ss_delta = 1e-12;        // steady-state covariance iteration step
  int ss_max_iter = 200000;
  double ss_residual = 1e-9;
  double cov_divergence_trace = 1e12;

  // simulator
  double overflow_cap = 1e9;      // sup-norm cap on simulated states
  double cost_tail = 1e-8;        // choose T_sim so beta^T_sim < cost_tail

  // verifier
  double gain_identity_tol = 1e-10;
  double nesting_tol = 1e-8;
  double meanfield_residual = 1e-12;
  double gap_sigma = 2.0;         // pass deviation gaps >= -gap_sigma * stderr
  double moment_z = 4.0;          // moment consistency z-score bound
  double control_sigma = 5.0;     // negative control must fail by this many sigma
};

// Block layout of the stacked state X_t = (x^0, x^1, ..., x^N) and the
// stacked decision vector. Environment block comes first.
struct DimensionTable {
  int n_y = 0;
  int env_dim = 0;
  std::vector<int> player_x;
  std::vector<int> player_u;
  std::vector<int> x_offset;  // player i state block starts at x_offset[i]
  std::vector<int> u_offset;
  int x_dim = 0;
  int u_dim = 0;

  int num_players() const { return static_cast<int>(player_x.size()); }

  // View of player i's state block inside a stacked vector.
  Eigen::VectorBlock<const Vector> player_state(const Vector& X, int i) const {
    return X.segment(x_offset[static_cast<size_t>(i)],
                     player_x[static_cast<size_t>(i)]);
  }
  Eigen::VectorBlock<const Vector> env_state(const Vector& X) const {
    return X.segment(0, env_dim);
  }
};

inline double spectral_radius(const Matrix& A) {
  if (A.rows() == 0) return 0.0;
  return A.eigenvalues().cwiseAbs().maxCoeff();
}

// Symmetric part; the Riccati and covariance recursions are symmetric
// analytically, so drift is squashed after every step.
inline Matrix symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

}  // namespace sebeu
