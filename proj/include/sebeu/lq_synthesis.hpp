#pragma once

#include "sebeu/common.hpp"
#include "sebeu/game_model.hpp"

#include <cstdint>
#include <vector>

namespace sebeu {

// Matrices of the completed-square stage cost
//   c~(x,u,z) = |x + x_shift z|^2_Q + |u + u_shift z|^2_R
// with c(x,u,z) = c~(x,u,z) - |z|^2_{z_weight}.
struct TransformedCost {
  Matrix x_shift;   // Q^{-1} L'
  Matrix u_shift;   // R^{-1} K'
  Matrix Q, R;
  Matrix z_weight;  // L Q^{-1} L' + K R^{-1} K'

  double transformed(const Vector& x, const Vector& u, const Vector& z) const {
    const Vector xs = x + x_shift * z;
    const Vector us = u + u_shift * z;
    return xs.dot(Q * xs) + us.dot(R * us);
  }
};

TransformedCost completed_square_cost(const PlayerSpec& p, int t = 0);

// Output of the finite-horizon backward recursion for one player. G and Phi
// are lag-indexed: G[k][j] applies to the predicted environment mean j stages
// ahead of k, i.e. the matrix G_{k,k+j}.
struct FiniteGainSchedule {
  double beta = 1.0;
  std::vector<Matrix> F;               // k in [0,T)
  std::vector<std::vector<Matrix>> G;  // G[k][j] = G_{k,k+j}, j in [0,T-k)
  std::vector<Vector> H;               // k in [0,T)
  std::vector<Matrix> M;               // k in [0,T], M[T] = Q_terminal
  std::vector<Matrix> S;               // k in [0,T)
  std::vector<std::vector<Matrix>> Phi;  // Phi[k][j], j in [0,T-k)

  int T() const { return static_cast<int>(F.size()); }
};

// Backward recursion over [0,T). w_mean holds the player's own disturbance
// means per stage; pass an empty vector for zero-mean noise.
FiniteGainSchedule riccati_backward(const PlayerSpec& p, int T,
                                    const std::vector<Vector>& w_mean = {},
                                    const Tolerances& tol = {});

// Stationary gains of the infinite-horizon problem. G[n] is the lag-n gain.
struct StationaryGains {
  double beta = 0.0;
  Matrix F, M, S;
  std::vector<Matrix> G;
  Vector H;
  double closed_loop_radius = 0.0;  // rho(sqrt(beta) (A + B F))
  double are_residual = 0.0;
  int iterations = 0;
  int n_tail() const { return static_cast<int>(G.size()) - 1; }
};

StationaryGains are_solve(const PlayerSpec& p, const Vector& w_mean,
                          const Tolerances& tol = {});

struct BellmanResidualStats {
  double max_dev = 0.0;
  double mean_dev = 0.0;
  int samples = 0;
};

// Samples (x, z-profile) points, forms the minimizer of the one-stage
// quadratic directly from (A,B,C,K,L,R,M) and compares it against the
// strategy F x + sum_n G_n z_n + H. The direct route never touches the G_n
// closed forms.
BellmanResidualStats bellman_residual(const PlayerSpec& p,
                                      const StationaryGains& gains,
                                      const Vector& w_mean, int samples,
                                      uint64_t seed);

// One application of the Riccati difference map M -> Q + beta A'(M - beta M B
// S^{-1} B' M)A with S = R + beta B' M B. Shared by the backward recursion,
// the ARE iteration, and the monotonicity tests.
Matrix riccati_step(const Matrix& A, const Matrix& B, const Matrix& Q,
                    const Matrix& R, double beta, const Matrix& M);

}  // namespace sebeu
