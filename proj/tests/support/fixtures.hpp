#pragma once

#include "sebeu/env_fixed_point.hpp"
#include "sebeu/estimator.hpp"
#include "sebeu/game_model.hpp"
#include "sebeu/lq_synthesis.hpp"
#include "sebeu/simulator.hpp"

namespace sebeu::testing {

// Two players (1-dim and 2-dim state), scalar environment state and
// observation -> stacked dimension 5. Weak couplings, nonzero noise means.
inline GameSpec reference_finite_spec(int T = 4) {
  GameSpec spec;
  spec.horizon = Horizon::finite(T);

  PlayerSpec p0;
  p0.A = Matrix::Constant(1, 1, 0.8);
  p0.B = Matrix::Constant(1, 1, 1.0);
  p0.C = Matrix::Constant(1, 1, 0.05);
  p0.Q_stage = Matrix::Constant(1, 1, 1.0);
  p0.R = Matrix::Constant(1, 1, 1.0);
  p0.K = Matrix::Constant(1, 1, 0.05);
  p0.L = Matrix::Constant(1, 1, 0.05);
  p0.Q_terminal = Matrix::Constant(1, 1, 1.0);
  p0.beta = 0.95;
  spec.players.push_back(p0);

  PlayerSpec p1;
  p1.A = (Matrix(2, 2) << 0.6, 0.2, 0.0, 0.5).finished();
  p1.B = (Matrix(2, 1) << 1.0, 0.3).finished();
  p1.C = (Matrix(2, 1) << 0.04, 0.02).finished();
  p1.Q_stage = (Matrix(2, 2) << 1.0, 0.1, 0.1, 1.2).finished();
  p1.R = Matrix::Constant(1, 1, 1.0);
  p1.K = Matrix::Constant(1, 1, 0.03);
  p1.L = (Matrix(1, 2) << 0.02, 0.01).finished();
  p1.Q_terminal = Matrix::Identity(2, 2);
  p1.beta = 0.9;
  spec.players.push_back(p1);

  EnvironmentSpec& env = spec.environment;
  env.A0 = (Matrix(2, 2) << 0.6, 0.1, 0.0, 0.5).finished();
  env.D = (Matrix(1, 2) << 0.7, 0.3).finished();
  env.B1 = {(Matrix(2, 1) << 0.05, 0.02).finished(),
            (Matrix(2, 1) << 0.04, 0.01).finished()};
  env.B2 = {(Matrix(2, 1) << 0.05, 0.02).finished(),
            (Matrix(2, 2) << 0.03, 0.02, 0.01, 0.02).finished()};
  env.E1 = {Matrix::Constant(1, 1, 0.05), Matrix::Constant(1, 1, 0.04)};
  env.E2 = {Matrix::Constant(1, 1, 0.06),
            (Matrix(1, 2) << 0.03, 0.02).finished()};

  NoiseSpec& noise = spec.noise;
  noise.x0_mean = (Vector(5) << 0.1, 0.0, -0.1, 0.05, 0.0).finished();
  noise.x0_cov = (Matrix(5, 5) << 0.5, 0.1, 0.0, 0.0, 0.0,
                                  0.1, 0.4, 0.0, 0.0, 0.0,
                                  0.0, 0.0, 0.4, 0.05, 0.0,
                                  0.0, 0.0, 0.05, 0.4, 0.1,
                                  0.0, 0.0, 0.0, 0.1, 0.3).finished();
  noise.w_mean = (Vector(5) << 0.02, 0.0, 0.01, 0.0, -0.01).finished();
  noise.w_cov = (Matrix(5, 5) << 0.3, 0.0, 0.0, 0.0, 0.0,
                                 0.0, 0.2, 0.0, 0.0, 0.0,
                                 0.0, 0.0, 0.25, 0.0, 0.0,
                                 0.0, 0.0, 0.0, 0.2, 0.05,
                                 0.0, 0.0, 0.0, 0.05, 0.2).finished();
  noise.xi_mean = Vector::Constant(1, 0.1);
  noise.xi_cov = Matrix::Constant(1, 1, 0.4);
  return spec;
}

inline GameSpec reference_infinite_spec() {
  GameSpec spec = reference_finite_spec();
  spec.horizon = Horizon::endless();
  return spec;
}

struct SolvedPipeline {
  GameSpec spec;
  DimensionTable dims;
  std::vector<FiniteGainSchedule> finite_gains;
  std::vector<StationaryGains> stationary_gains;
  AggregatedDynamics agg;
  EnvFixedPoint fp;
  std::shared_ptr<ClosedLoopModel> model;
  StrategyProfile profile;
};

inline std::vector<std::vector<Vector>> own_w_means(const GameSpec& spec) {
  const DimensionTable dims = stack_dimensions(spec);
  const int T = spec.horizon.infinite ? 1 : spec.horizon.T;
  std::vector<std::vector<Vector>> out(spec.players.size());
  for (size_t i = 0; i < spec.players.size(); ++i)
    for (int t = 0; t < T; ++t)
      out[i].push_back(
          spec.noise.w_mean_at(t).segment(dims.x_offset[i], dims.player_x[i]));
  return out;
}

inline SolvedPipeline solve_pipeline(const GameSpec& spec,
                                     const Tolerances& tol = {}) {
  SolvedPipeline pl;
  pl.spec = spec;
  pl.dims = stack_dimensions(spec);
  const auto wm = own_w_means(spec);
  if (spec.horizon.infinite) {
    for (size_t i = 0; i < spec.players.size(); ++i)
      pl.stationary_gains.push_back(are_solve(spec.players[i], wm[i][0], tol));
    pl.agg = aggregate(spec, pl.stationary_gains);
    pl.fp = solve_infinite(pl.agg, spec.noise.x0_mean, tol);
    pl.model = std::make_shared<ClosedLoopModel>(make_closed_loop(pl.agg, pl.fp));
    pl.profile = make_strategy_profile(spec, pl.stationary_gains, pl.fp, pl.model);
  } else {
    for (size_t i = 0; i < spec.players.size(); ++i)
      pl.finite_gains.push_back(
          riccati_backward(spec.players[i], spec.horizon.T, wm[i], tol));
    pl.agg = aggregate(spec, pl.finite_gains);
    pl.fp = solve_finite(pl.agg, tol);
    pl.model = std::make_shared<ClosedLoopModel>(make_closed_loop(pl.agg, pl.fp));
    pl.profile = make_strategy_profile(spec, pl.finite_gains, pl.fp, pl.model);
  }
  return pl;
}

}  // namespace sebeu::testing
