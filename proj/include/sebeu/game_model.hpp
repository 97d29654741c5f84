#pragma once

#include "sebeu/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sebeu {

enum class NoiseFamily { gaussian, moments_only };

// One stage of a time-varying player description. Finite horizon only.
struct PlayerStage {
  Matrix A, B, C, Q, R, K, L;
};

// Dynamics x_{t+1} = A x_t + B u_t + C y_t + w_t and stage cost
// |x|^2_Q + |u|^2_R + 2 y'(K u + L x), discounted by beta, with terminal
// cost |x_T|^2_{Q_terminal} in the finite-horizon case.
struct PlayerSpec {
  Matrix A, B, C;
  Matrix Q_stage, R, K, L;
  Matrix Q_terminal;
  double beta = 1.0;
  std::vector<PlayerStage> stages;  // empty = time-invariant

  int nx() const { return static_cast<int>(A.rows()); }
  int nu() const { return static_cast<int>(B.cols()); }
  int ny() const { return static_cast<int>(C.cols()); }
  bool time_varying() const { return !stages.empty(); }

  const Matrix& A_at(int t) const { return stages.empty() ? A : stages[static_cast<size_t>(t)].A; }
  const Matrix& B_at(int t) const { return stages.empty() ? B : stages[static_cast<size_t>(t)].B; }
  const Matrix& C_at(int t) const { return stages.empty() ? C : stages[static_cast<size_t>(t)].C; }
  const Matrix& Q_at(int t) const { return stages.empty() ? Q_stage : stages[static_cast<size_t>(t)].Q; }
  const Matrix& R_at(int t) const { return stages.empty() ? R : stages[static_cast<size_t>(t)].R; }
  const Matrix& K_at(int t) const { return stages.empty() ? K : stages[static_cast<size_t>(t)].K; }
  const Matrix& L_at(int t) const { return stages.empty() ? L : stages[static_cast<size_t>(t)].L; }
};

struct EnvStage {
  Matrix A0, D;
  std::vector<Matrix> B1, B2, E1, E2;
};

// Environment recursion x^0_{t+1} = A0 x^0_t + sum_i (B1_i u^i_t + B2_i x^i_t) + w^0_t
// and observation y_t = D x^0_t + sum_i (E1_i u^i_t + E2_i x^i_t) + xi_t.
struct EnvironmentSpec {
  Matrix A0, D;
  std::vector<Matrix> B1, B2, E1, E2;  // one entry per player
  std::vector<EnvStage> stages;        // empty = time-invariant

  int nx0() const { return static_cast<int>(A0.rows()); }
  int ny() const { return static_cast<int>(D.rows()); }
  bool time_varying() const { return !stages.empty(); }

  const Matrix& A0_at(int t) const { return stages.empty() ? A0 : stages[static_cast<size_t>(t)].A0; }
  const Matrix& D_at(int t) const { return stages.empty() ? D : stages[static_cast<size_t>(t)].D; }
  const Matrix& B1_at(int t, int i) const {
    return stages.empty() ? B1[static_cast<size_t>(i)] : stages[static_cast<size_t>(t)].B1[static_cast<size_t>(i)];
  }
  const Matrix& B2_at(int t, int i) const {
    return stages.empty() ? B2[static_cast<size_t>(i)] : stages[static_cast<size_t>(t)].B2[static_cast<size_t>(i)];
  }
  const Matrix& E1_at(int t, int i) const {
    return stages.empty() ? E1[static_cast<size_t>(i)] : stages[static_cast<size_t>(t)].E1[static_cast<size_t>(i)];
  }
  const Matrix& E2_at(int t, int i) const {
    return stages.empty() ? E2[static_cast<size_t>(i)] : stages[static_cast<size_t>(t)].E2[static_cast<size_t>(i)];
  }
};

// Moments of the primitive random variables: stacked initial state
// X_0 = (x^0_0, x^1_0, ..., x^N_0), stacked disturbances W_t, and xi_t.
struct NoiseSpec {
  NoiseFamily family = NoiseFamily::gaussian;
  Vector x0_mean;
  Matrix x0_cov;
  Vector w_mean;
  Matrix w_cov;
  Vector xi_mean;
  Matrix xi_cov;
  // optional per-stage sequences (finite horizon), length T when present
  std::vector<Vector> w_mean_stages;
  std::vector<Matrix> w_cov_stages;
  std::vector<Vector> xi_mean_stages;
  std::vector<Matrix> xi_cov_stages;

  bool time_varying() const {
    return !w_mean_stages.empty() || !w_cov_stages.empty() ||
           !xi_mean_stages.empty() || !xi_cov_stages.empty();
  }
  const Vector& w_mean_at(int t) const {
    return w_mean_stages.empty() ? w_mean : w_mean_stages[static_cast<size_t>(t)];
  }
  const Matrix& w_cov_at(int t) const {
    return w_cov_stages.empty() ? w_cov : w_cov_stages[static_cast<size_t>(t)];
  }
  const Vector& xi_mean_at(int t) const {
    return xi_mean_stages.empty() ? xi_mean : xi_mean_stages[static_cast<size_t>(t)];
  }
  const Matrix& xi_cov_at(int t) const {
    return xi_cov_stages.empty() ? xi_cov : xi_cov_stages[static_cast<size_t>(t)];
  }
};

struct Horizon {
  bool infinite = false;
  int T = 0;

  static Horizon finite(int T) { return Horizon{false, T}; }
  static Horizon endless() { return Horizon{true, 0}; }
};

struct GameSpec {
  std::vector<PlayerSpec> players;
  EnvironmentSpec environment;
  NoiseSpec noise;
  Horizon horizon;
  // Countably-infinite identical players: one representative player, no
  // environment state, y_t = empirical average of (E1 u + E2 x) + xi_t.
  bool mean_field = false;

  int num_players() const { return static_cast<int>(players.size()); }
};

struct Violation {
  std::string field;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool valid() const { return violations.empty(); }
  std::string to_string() const;
};

// Checks every structural invariant of the model data. Never throws; all
// problems are listed in the report with the offending field.
ValidationReport validate(const GameSpec& spec, const Tolerances& tol = {});

// True iff players i and j have element-wise equal dynamics/cost data
// (including beta and, in the finite case, the terminal weight) and equal
// noise moments for their own blocks. Throws on out-of-range indices.
bool are_identical(const GameSpec& spec, int i, int j);

// Block layout of the stacked state and decision vectors, environment first.
DimensionTable stack_dimensions(const GameSpec& spec);

// Stage cost c_t^i(x, u, y) and terminal cost of a player.
double stage_cost(const PlayerSpec& p, int t, const Vector& x, const Vector& u,
                  const Vector& y);
double terminal_cost(const PlayerSpec& p, const Vector& x);

// PBH-style test: for every eigenvalue of A with |lambda| >= 1, the matrix
// [A - lambda I, B] must have full row rank.
bool is_stabilizable(const Matrix& A, const Matrix& B, double rank_tol = 1e-9);

}  // namespace sebeu
