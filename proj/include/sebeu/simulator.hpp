#pragma once

#include "sebeu/common.hpp"
#include "sebeu/estimator.hpp"
#include "sebeu/game_model.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace sebeu {

// Affine strategy u_t = F_t x_t + G_t Xhat_{t|t-1} + H_t. Stationary
// strategies store one stage.
struct PlayerStrategy {
  bool stationary = false;
  std::vector<Matrix> F;  // n_u x n_x
  std::vector<Matrix> G;  // n_u x x_dim
  std::vector<Vector> H;  // n_u

  const Matrix& F_at(int t) const { return F[stationary ? 0 : static_cast<size_t>(t)]; }
  const Matrix& G_at(int t) const { return G[stationary ? 0 : static_cast<size_t>(t)]; }
  const Vector& H_at(int t) const { return H[stationary ? 0 : static_cast<size_t>(t)]; }
};

// Additive perturbation over the whole schedule, used by the deviation tests.
PlayerStrategy perturbed(const PlayerStrategy& s, const Matrix& dF,
                         const Matrix& dG, const Vector& dH);

struct StrategyProfile {
  std::vector<PlayerStrategy> players;
  std::shared_ptr<const ClosedLoopModel> estimator;
};

StrategyProfile make_strategy_profile(
    const GameSpec& spec, const std::vector<FiniteGainSchedule>& gains,
    const EnvFixedPoint& fp, std::shared_ptr<const ClosedLoopModel> model);
StrategyProfile make_strategy_profile(
    const GameSpec& spec, const std::vector<StationaryGains>& gains,
    const EnvFixedPoint& fp, std::shared_ptr<const ClosedLoopModel> model);
// Countable identical players: u = F x + (G y0 + H), no estimator needed.
StrategyProfile make_meanfield_profile(const GameSpec& spec,
                                       const StationaryGains& gains,
                                       const Vector& y0);

struct SimOptions {
  int paths = 1000;
  uint64_t seed = 0;
  int horizon = 0;  // 0 = T (finite) or the discount-tail default (infinite)
  int workers = 0;  // 0 = hardware concurrency
  bool store_trajectories = false;
};

// Per-stage first/second-moment summaries, reduced in fixed block order so
// results are independent of the worker count.
struct SummarySeries {
  std::vector<Vector> mean;
  std::vector<Matrix> cov;
  std::vector<Vector> stderr_mean;
};

struct PathTrajectories {
  std::vector<Matrix> X;  // (horizon+1) x dim, one per path
  std::vector<Matrix> y;  // horizon x n_y
  std::vector<Matrix> u;  // horizon x u_dim
};

struct SimulationBatch {
  uint64_t seed = 0;
  int paths = 0;
  int horizon = 0;
  std::vector<std::vector<double>> cost;  // cost[player][path], discounted
  std::vector<double> cost_mean;
  std::vector<double> cost_stderr;
  std::vector<double> cost_tail_bound;  // infinite-horizon truncation bound
  SummarySeries y_stats;
  SummarySeries X_stats;
  std::optional<PathTrajectories> trajectories;
};

int default_horizon(const GameSpec& spec, const Tolerances& tol = {});

// True coupled system: every player applies its strategy fed by the shared
// estimator driven by realized observations.
SimulationBatch simulate_objective(const GameSpec& spec,
                                   const StrategyProfile& profile,
                                   const SimOptions& opts,
                                   const Tolerances& tol = {});

// Environment sequences drawn from the exogenous model, the player's own
// dynamics run against them. All strategies are evaluated on common random
// numbers; entry s of the result holds the cost samples of strategies[s].
std::vector<std::vector<double>> simulate_subjective_costs(
    const GameSpec& spec, int player,
    const std::vector<PlayerStrategy>& strategies, const ClosedLoopModel& model,
    const SimOptions& opts, const Tolerances& tol = {});

SimulationBatch simulate_subjective(const GameSpec& spec, int player,
                                    const PlayerStrategy& strategy,
                                    const ClosedLoopModel& model,
                                    const SimOptions& opts,
                                    const Tolerances& tol = {});

// Finite population of identical players; the environment is driven by the
// empirical average. Player 0 optionally deviates. Per-agent costs are
// recorded for agents 0 and 1.
SimulationBatch simulate_meanfield(const GameSpec& spec,
                                   const StrategyProfile& profile,
                                   int population, const SimOptions& opts,
                                   const PlayerStrategy* deviator = nullptr,
                                   const Tolerances& tol = {});

}  // namespace sebeu
