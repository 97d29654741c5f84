#include "sebeu/simulator.hpp"

#include "sebeu/rng.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

namespace sebeu {

namespace {

constexpr uint64_t kPurposeObjective = 0x01;
constexpr uint64_t kPurposeSubjectiveEnv = 0x02;
constexpr uint64_t kPurposeSubjectivePlayer = 0x03;
constexpr uint64_t kPurposeMeanField = 0x04;

constexpr int kBlockSize = 1024;

int resolve_workers(int workers) {
  if (workers > 0) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(block_index, begin, end) over fixed-size path blocks. Block
// boundaries do not depend on the worker count, so any per-block output that
// is later reduced in block order is scheduling-independent.
template <typename Fn>
void parallel_blocks(int paths, int workers, Fn&& fn) {
  const int blocks = (paths + kBlockSize - 1) / kBlockSize;
  workers = std::min(resolve_workers(workers), blocks);
  if (workers <= 1) {
    for (int b = 0; b < blocks; ++b)
      fn(b, b * kBlockSize, std::min(paths, (b + 1) * kBlockSize));
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      try {
        for (int b = next.fetch_add(1); b < blocks; b = next.fetch_add(1))
          fn(b, b * kBlockSize, std::min(paths, (b + 1) * kBlockSize));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Per-block moment accumulator for one vector-valued series.
struct BlockMoments {
  std::vector<Vector> sum;
  std::vector<Matrix> outer;
  int count = 0;

  void init(int stages, int dim, bool with_outer) {
    sum.assign(static_cast<size_t>(stages), Vector::Zero(dim));
    if (with_outer)
      outer.assign(static_cast<size_t>(stages), Matrix::Zero(dim, dim));
  }
  void add(int t, const Vector& v) {
    sum[static_cast<size_t>(t)] += v;
    if (!outer.empty()) outer[static_cast<size_t>(t)] += v * v.transpose();
  }
};

SummarySeries reduce_moments(const std::vector<BlockMoments>& blocks,
                             int stages, int dim, int paths) {
  SummarySeries out;
  out.mean.assign(static_cast<size_t>(stages), Vector::Zero(dim));
  const bool with_outer = !blocks.empty() && !blocks.front().outer.empty();
  if (with_outer)
    out.cov.assign(static_cast<size_t>(stages), Matrix::Zero(dim, dim));
  out.stderr_mean.assign(static_cast<size_t>(stages), Vector::Zero(dim));

  for (int t = 0; t < stages; ++t) {
    Vector s = Vector::Zero(dim);
    Matrix o = Matrix::Zero(dim, dim);
    for (const auto& b : blocks) {
      s += b.sum[static_cast<size_t>(t)];
      if (with_outer) o += b.outer[static_cast<size_t>(t)];
    }
    const Vector m = s / paths;
    out.mean[static_cast<size_t>(t)] = m;
    if (with_outer) {
      Matrix cov = o / paths - m * m.transpose();
      if (paths > 1) cov *= static_cast<double>(paths) / (paths - 1);
      out.cov[static_cast<size_t>(t)] = symmetrize(cov);
      out.stderr_mean[static_cast<size_t>(t)] =
          (out.cov[static_cast<size_t>(t)].diagonal() / paths)
              .cwiseMax(0.0)
              .cwiseSqrt();
    }
  }
  return out;
}

void check_gaussian(const NoiseSpec& noise) {
  if (noise.family != NoiseFamily::gaussian)
    throw SimulationError(
        "simulation requires the Gaussian noise family; moments-only "
        "specifications cannot be sampled");
}

void check_overflow(const Vector& X, int path, int t, const Tolerances& tol) {
  if (!X.allFinite() || X.cwiseAbs().maxCoeff() > tol.overflow_cap) {
    std::ostringstream os;
    os << "state norm exceeded " << tol.overflow_cap << " at path " << path
       << ", stage " << t << ": closed loop unstable; batch discarded";
    throw SimulationError(os.str());
  }
}

// Precomputed per-stage filter update: xhat+ = Mx xhat + My y + mc.
struct FilterPlan {
  std::vector<Matrix> Mx, My;
  std::vector<Vector> mc;
  void build(const ClosedLoopModel& model, int horizon, const Tolerances& tol) {
    Mx.reserve(static_cast<size_t>(horizon));
    My.reserve(static_cast<size_t>(horizon));
    mc.reserve(static_cast<size_t>(horizon));
    FilterState fs = initial_filter_state(model);
    for (int t = 0; t < horizon; ++t) {
      const ClosedLoopStage& st = model.at(t);
      const FilterState next = filter_step(model, fs, Vector::Zero(model.dims.n_y), t, tol);
      const Matrix& K = next.gain;
      Mx.push_back(st.A + st.GX - K * (st.D + st.Gp));
      My.push_back(st.C + K);
      mc.push_back(st.HX + st.W_mean - K * (st.Hp + st.xi_mean));
      fs = next;
    }
  }
};

struct StageSamplers {
  std::vector<GaussianSampler> xi;  // per stage (or single, reused)
  std::vector<GaussianSampler> W;
  bool staged = false;
  const GaussianSampler& xi_at(int t) const {
    return staged ? xi[static_cast<size_t>(t)] : xi[0];
  }
  const GaussianSampler& W_at(int t) const {
    return staged ? W[static_cast<size_t>(t)] : W[0];
  }
  void build(const NoiseSpec& noise, int horizon) {
    staged = noise.time_varying();
    const int n = staged ? horizon : 1;
    for (int t = 0; t < n; ++t) {
      xi.emplace_back(noise.xi_mean_at(t), noise.xi_cov_at(t));
      W.emplace_back(noise.w_mean_at(t), noise.w_cov_at(t));
    }
  }
};

}  // namespace

PlayerStrategy perturbed(const PlayerStrategy& s, const Matrix& dF,
                         const Matrix& dG, const Vector& dH) {
  PlayerStrategy out = s;
  for (auto& F : out.F) F += dF;
  for (auto& G : out.G) G += dG;
  for (auto& H : out.H) H += dH;
  return out;
}

StrategyProfile make_strategy_profile(
    const GameSpec& spec, const std::vector<FiniteGainSchedule>& gains,
    const EnvFixedPoint& fp, std::shared_ptr<const ClosedLoopModel> model) {
  if (fp.infinite) throw Error("make_strategy_profile: finite gains expected");
  const int T = spec.horizon.T;
  StrategyProfile profile;
  profile.estimator = std::move(model);
  for (size_t i = 0; i < gains.size(); ++i) {
    const FiniteGainSchedule& g = gains[i];
    PlayerStrategy s;
    s.stationary = false;
    for (int t = 0; t < T; ++t) {
      s.F.push_back(g.F[static_cast<size_t>(t)]);
      Matrix G = Matrix::Zero(spec.players[i].nu(), profile.estimator->dims.x_dim);
      Vector H = g.H[static_cast<size_t>(t)];
      for (int j = 0; j < T - t; ++j) {
        G += g.G[static_cast<size_t>(t)][static_cast<size_t>(j)] *
             fp.a[static_cast<size_t>(t)][static_cast<size_t>(j)];
        H += g.G[static_cast<size_t>(t)][static_cast<size_t>(j)] *
             fp.b[static_cast<size_t>(t)][static_cast<size_t>(j)];
      }
      s.G.push_back(std::move(G));
      s.H.push_back(std::move(H));
    }
    profile.players.push_back(std::move(s));
  }
  return profile;
}

StrategyProfile make_strategy_profile(
    const GameSpec& spec, const std::vector<StationaryGains>& gains,
    const EnvFixedPoint& fp, std::shared_ptr<const ClosedLoopModel> model) {
  if (!fp.infinite) throw Error("make_strategy_profile: stationary gains expected");
  StrategyProfile profile;
  profile.estimator = std::move(model);
  const int avail = static_cast<int>(fp.a_lag.size());
  for (size_t i = 0; i < gains.size(); ++i) {
    const StationaryGains& g = gains[i];
    PlayerStrategy s;
    s.stationary = true;
    Matrix G = Matrix::Zero(spec.players[i].nu(), profile.estimator->dims.x_dim);
    Vector H = g.H;
    for (int n = 0; n < static_cast<int>(g.G.size()); ++n) {
      if (n < avail) {
        G += g.G[static_cast<size_t>(n)] * fp.a_lag[static_cast<size_t>(n)];
        H += g.G[static_cast<size_t>(n)] * fp.b_lag[static_cast<size_t>(n)];
      } else {
        H += g.G[static_cast<size_t>(n)] * fp.y_inf;
      }
    }
    s.F.push_back(g.F);
    s.G.push_back(std::move(G));
    s.H.push_back(std::move(H));
    profile.players.push_back(std::move(s));
  }
  return profile;
}

StrategyProfile make_meanfield_profile(const GameSpec& spec,
                                       const StationaryGains& gains,
                                       const Vector& y0) {
  StrategyProfile profile;
  PlayerStrategy s;
  s.stationary = true;
  Matrix G_total = Matrix::Zero(spec.players[0].nu(), spec.environment.ny());
  for (const auto& Gn : gains.G) G_total += Gn;
  s.F.push_back(gains.F);
  s.G.push_back(Matrix::Zero(spec.players[0].nu(), spec.players[0].nx()));
  s.H.push_back(G_total * y0 + gains.H);
  profile.players.push_back(std::move(s));
  return profile;
}

int default_horizon(const GameSpec& spec, const Tolerances& tol) {
  if (!spec.horizon.infinite) return spec.horizon.T;
  double beta_max = 0.0;
  for (const auto& p : spec.players) beta_max = std::max(beta_max, p.beta);
  if (beta_max <= 0.0) return 1;
  const int h = static_cast<int>(
      std::ceil(std::log(tol.cost_tail) / std::log(beta_max)));
  return std::max(1, h);
}

SimulationBatch simulate_objective(const GameSpec& spec,
                                   const StrategyProfile& profile,
                                   const SimOptions& opts,
                                   const Tolerances& tol) {
  check_gaussian(spec.noise);
  const DimensionTable dims = stack_dimensions(spec);
  const int N = spec.num_players();
  const int H = opts.horizon > 0 ? opts.horizon : default_horizon(spec, tol);
  if (!spec.horizon.infinite && H != spec.horizon.T)
    throw SimulationError(
        "finite-horizon simulation must run over the full horizon T");
  bool any_estimate_feedback = false;
  for (const auto& s : profile.players)
    for (const auto& G : s.G)
      any_estimate_feedback =
          any_estimate_feedback || (G.size() > 0 && G.cwiseAbs().maxCoeff() != 0.0);
  const bool use_filter = profile.estimator != nullptr && any_estimate_feedback;
  if (profile.estimator == nullptr && any_estimate_feedback)
    throw SimulationError("objective simulation requires an estimator model");

  FilterPlan plan;
  if (use_filter) plan.build(*profile.estimator, H, tol);
  StageSamplers noise;
  noise.build(spec.noise, H);
  const GaussianSampler x0_sampler(spec.noise.x0_mean, spec.noise.x0_cov);

  // Stage maps of the true coupled system.
  bool any_tv = spec.environment.time_varying() || spec.noise.time_varying();
  for (const auto& p : spec.players) any_tv = any_tv || p.time_varying();
  const int stages = any_tv ? H : 1;
  std::vector<Matrix> XA(static_cast<size_t>(stages)),
      XB(static_cast<size_t>(stages)), Cy(static_cast<size_t>(stages)),
      Ymap(static_cast<size_t>(stages));
  std::vector<std::vector<Matrix>> E1(static_cast<size_t>(stages));
  for (int t = 0; t < stages; ++t) {
    Matrix& A = XA[static_cast<size_t>(t)];
    Matrix& B = XB[static_cast<size_t>(t)];
    Matrix& C = Cy[static_cast<size_t>(t)];
    Matrix& Y = Ymap[static_cast<size_t>(t)];
    A.setZero(dims.x_dim, dims.x_dim);
    B.setZero(dims.x_dim, dims.u_dim);
    C.setZero(dims.x_dim, dims.n_y);
    Y.setZero(dims.n_y, dims.x_dim);
    if (dims.env_dim > 0) {
      A.topLeftCorner(dims.env_dim, dims.env_dim) = spec.environment.A0_at(t);
      Y.leftCols(dims.env_dim) = spec.environment.D_at(t);
    }
    E1[static_cast<size_t>(t)].resize(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) {
      const PlayerSpec& p = spec.players[static_cast<size_t>(i)];
      const int xo = dims.x_offset[static_cast<size_t>(i)];
      const int uo = dims.u_offset[static_cast<size_t>(i)];
      A.block(xo, xo, p.nx(), p.nx()) = p.A_at(t);
      B.block(xo, uo, p.nx(), p.nu()) = p.B_at(t);
      C.middleRows(xo, p.nx()) = p.C_at(t);
      if (dims.env_dim > 0) {
        A.block(0, xo, dims.env_dim, p.nx()) = spec.environment.B2_at(t, i);
        B.block(0, uo, dims.env_dim, p.nu()) = spec.environment.B1_at(t, i);
      }
      Y.middleCols(xo, p.nx()) += spec.environment.E2_at(t, i);
      E1[static_cast<size_t>(t)][static_cast<size_t>(i)] =
          spec.environment.E1_at(t, i);
    }
  }
  auto stage_index = [&](int t) { return stages == 1 ? 0 : t; };

  SimulationBatch batch;
  batch.seed = opts.seed;
  batch.paths = opts.paths;
  batch.horizon = H;
  batch.cost.assign(static_cast<size_t>(N),
                    std::vector<double>(static_cast<size_t>(opts.paths), 0.0));

  const int blocks = (opts.paths + kBlockSize - 1) / kBlockSize;
  std::vector<BlockMoments> y_blocks(static_cast<size_t>(blocks));
  std::vector<BlockMoments> X_blocks(static_cast<size_t>(blocks));
  std::vector<BlockMoments> abs_cost_blocks(static_cast<size_t>(blocks));
  for (auto& b : y_blocks) b.init(H, dims.n_y, true);
  for (auto& b : X_blocks) b.init(H + 1, dims.x_dim, false);
  for (auto& b : abs_cost_blocks) b.init(1, N, false);

  if (opts.store_trajectories) {
    batch.trajectories.emplace();
    batch.trajectories->X.resize(static_cast<size_t>(opts.paths));
    batch.trajectories->y.resize(static_cast<size_t>(opts.paths));
    batch.trajectories->u.resize(static_cast<size_t>(opts.paths));
  }

  parallel_blocks(opts.paths, opts.workers, [&](int block, int begin, int end) {
    for (int path = begin; path < end; ++path) {
      PathRng rng(opts.seed, kPurposeObjective, static_cast<uint64_t>(path));
      Vector X = x0_sampler.sample(rng);
      Vector xhat = use_filter ? profile.estimator->x0_mean : Vector();
      std::vector<double> discount(static_cast<size_t>(N), 1.0);
      Matrix trajX, trajY, trajU;
      if (opts.store_trajectories) {
        trajX.setZero(H + 1, dims.x_dim);
        trajY.setZero(H, dims.n_y);
        trajU.setZero(H, dims.u_dim);
      }
      Vector abs_last = Vector::Zero(N);
      for (int t = 0; t < H; ++t) {
        check_overflow(X, path, t, tol);
        X_blocks[static_cast<size_t>(block)].add(t, X);
        if (opts.store_trajectories) trajX.row(t) = X.transpose();
        const int si = stage_index(t);

        Vector u(dims.u_dim);
        for (int i = 0; i < N; ++i) {
          const PlayerStrategy& s = profile.players[static_cast<size_t>(i)];
          const auto xi = dims.player_state(X, i);
          Vector ui = s.F_at(t) * xi + s.H_at(t);
          if (use_filter) ui += s.G_at(t) * xhat;
          u.segment(dims.u_offset[static_cast<size_t>(i)],
                    dims.player_u[static_cast<size_t>(i)]) = ui;
        }

        const Vector xi_draw = noise.xi_at(t).sample(rng);
        const Vector W_draw = noise.W_at(t).sample(rng);

        Vector y = Ymap[static_cast<size_t>(si)] * X + xi_draw;
        for (int i = 0; i < N; ++i)
          y += E1[static_cast<size_t>(si)][static_cast<size_t>(i)] *
               u.segment(dims.u_offset[static_cast<size_t>(i)],
                         dims.player_u[static_cast<size_t>(i)]);
        y_blocks[static_cast<size_t>(block)].add(t, y);
        if (opts.store_trajectories) {
          trajY.row(t) = y.transpose();
          trajU.row(t) = u.transpose();
        }

        for (int i = 0; i < N; ++i) {
          const PlayerSpec& p = spec.players[static_cast<size_t>(i)];
          const Vector xi = dims.player_state(X, i);
          const Vector ui = u.segment(dims.u_offset[static_cast<size_t>(i)],
                                      dims.player_u[static_cast<size_t>(i)]);
          const double c = stage_cost(p, t, xi, ui, y);
          batch.cost[static_cast<size_t>(i)][static_cast<size_t>(path)] +=
              discount[static_cast<size_t>(i)] * c;
          if (t == H - 1) abs_last(i) = std::abs(c);
          discount[static_cast<size_t>(i)] *= p.beta;
        }

        X = XA[static_cast<size_t>(si)] * X + XB[static_cast<size_t>(si)] * u +
            Cy[static_cast<size_t>(si)] * y + W_draw;
        if (use_filter)
          xhat = plan.Mx[static_cast<size_t>(t)] * xhat +
                 plan.My[static_cast<size_t>(t)] * y +
                 plan.mc[static_cast<size_t>(t)];
      }
      check_overflow(X, path, H, tol);
      X_blocks[static_cast<size_t>(block)].add(H, X);
      if (opts.store_trajectories) trajX.row(H) = X.transpose();
      abs_cost_blocks[static_cast<size_t>(block)].add(0, abs_last);

      if (!spec.horizon.infinite) {
        for (int i = 0; i < N; ++i) {
          const PlayerSpec& p = spec.players[static_cast<size_t>(i)];
          batch.cost[static_cast<size_t>(i)][static_cast<size_t>(path)] +=
              discount[static_cast<size_t>(i)] *
              terminal_cost(p, dims.player_state(X, i));
        }
      }
      if (opts.store_trajectories) {
        batch.trajectories->X[static_cast<size_t>(path)] = std::move(trajX);
        batch.trajectories->y[static_cast<size_t>(path)] = std::move(trajY);
        batch.trajectories->u[static_cast<size_t>(path)] = std::move(trajU);
      }
    }
  });

  batch.y_stats = reduce_moments(y_blocks, H, dims.n_y, opts.paths);
  batch.X_stats = reduce_moments(X_blocks, H + 1, dims.x_dim, opts.paths);

  batch.cost_mean.resize(static_cast<size_t>(N));
  batch.cost_stderr.resize(static_cast<size_t>(N));
  batch.cost_tail_bound.assign(static_cast<size_t>(N), 0.0);
  const SummarySeries abs_stats = reduce_moments(abs_cost_blocks, 1, N, opts.paths);
  for (int i = 0; i < N; ++i) {
    double s = 0.0;
    for (double c : batch.cost[static_cast<size_t>(i)]) s += c;
    const double m = s / opts.paths;
    double q = 0.0;
    for (double c : batch.cost[static_cast<size_t>(i)]) q += (c - m) * (c - m);
    batch.cost_mean[static_cast<size_t>(i)] = m;
    batch.cost_stderr[static_cast<size_t>(i)] =
        opts.paths > 1 ? std::sqrt(q / (opts.paths - 1) / opts.paths) : 0.0;
    if (spec.horizon.infinite) {
      const double beta = spec.players[static_cast<size_t>(i)].beta;
      const double bound = abs_stats.mean[0](i);
      batch.cost_tail_bound[static_cast<size_t>(i)] =
          std::pow(beta, H) / (1.0 - beta) * bound;
    }
  }
  return batch;
}

std::vector<std::vector<double>> simulate_subjective_costs(
    const GameSpec& spec, int player,
    const std::vector<PlayerStrategy>& strategies, const ClosedLoopModel& model,
    const SimOptions& opts, const Tolerances& tol) {
  check_gaussian(spec.noise);
  const DimensionTable dims = stack_dimensions(spec);
  const PlayerSpec& p = spec.players[static_cast<size_t>(player)];
  const int H = opts.horizon > 0 ? opts.horizon : default_horizon(spec, tol);
  if (!spec.horizon.infinite && H != spec.horizon.T)
    throw SimulationError(
        "finite-horizon simulation must run over the full horizon T");
  const int S = static_cast<int>(strategies.size());
  const int nx = p.nx();

  FilterPlan plan;
  plan.build(model, H, tol);
  StageSamplers env_noise;
  env_noise.build(spec.noise, H);
  const GaussianSampler X0_sampler(model.x0_mean, model.x0_cov);

  // Player-own marginals drawn independently of the environment replica.
  const int xo = dims.x_offset[static_cast<size_t>(player)];
  const GaussianSampler own_x0(spec.noise.x0_mean.segment(xo, nx),
                               spec.noise.x0_cov.block(xo, xo, nx, nx));
  std::vector<GaussianSampler> own_w;
  const int wstages = spec.noise.time_varying() ? H : 1;
  for (int t = 0; t < wstages; ++t)
    own_w.emplace_back(spec.noise.w_mean_at(t).segment(xo, nx),
                       spec.noise.w_cov_at(t).block(xo, xo, nx, nx));

  std::vector<std::vector<double>> costs(
      static_cast<size_t>(S),
      std::vector<double>(static_cast<size_t>(opts.paths), 0.0));

  parallel_blocks(opts.paths, opts.workers, [&](int, int begin, int end) {
    std::vector<Vector> x(static_cast<size_t>(S));
    for (int path = begin; path < end; ++path) {
      PathRng env_rng(opts.seed, kPurposeSubjectiveEnv,
                      static_cast<uint64_t>(path));
      PathRng own_rng(opts.seed, kPurposeSubjectivePlayer,
                      static_cast<uint64_t>(path));
      Vector Xbar = X0_sampler.sample(env_rng);
      Vector xhat = model.x0_mean;
      const Vector x0 = own_x0.sample(own_rng);
      for (int s = 0; s < S; ++s) x[static_cast<size_t>(s)] = x0;
      std::vector<double> discount(static_cast<size_t>(S), 1.0);

      for (int t = 0; t < H; ++t) {
        check_overflow(Xbar, path, t, tol);
        const ClosedLoopStage& st = model.at(t);
        const Vector xi_draw = env_noise.xi_at(t).sample(env_rng);
        const Vector W_draw = env_noise.W_at(t).sample(env_rng);
        const Vector y = st.D * Xbar + st.Gp * xhat + st.Hp + xi_draw;

        const Vector w_own =
            own_w[static_cast<size_t>(wstages == 1 ? 0 : t)].sample(own_rng);

        for (int s = 0; s < S; ++s) {
          const PlayerStrategy& strat = strategies[static_cast<size_t>(s)];
          Vector& xs = x[static_cast<size_t>(s)];
          check_overflow(xs, path, t, tol);
          const Vector u = strat.F_at(t) * xs + strat.G_at(t) * xhat + strat.H_at(t);
          costs[static_cast<size_t>(s)][static_cast<size_t>(path)] +=
              discount[static_cast<size_t>(s)] * stage_cost(p, t, xs, u, y);
          discount[static_cast<size_t>(s)] *= p.beta;
          xs = p.A_at(t) * xs + p.B_at(t) * u + p.C_at(t) * y + w_own;
        }

        Xbar = st.A * Xbar + st.GX * xhat + st.HX + st.C * y + W_draw;
        xhat = plan.Mx[static_cast<size_t>(t)] * xhat +
               plan.My[static_cast<size_t>(t)] * y +
               plan.mc[static_cast<size_t>(t)];
      }
      if (!spec.horizon.infinite) {
        for (int s = 0; s < S; ++s)
          costs[static_cast<size_t>(s)][static_cast<size_t>(path)] +=
              discount[static_cast<size_t>(s)] *
              terminal_cost(p, x[static_cast<size_t>(s)]);
      }
    }
  });
  return costs;
}

SimulationBatch simulate_subjective(const GameSpec& spec, int player,
                                    const PlayerStrategy& strategy,
                                    const ClosedLoopModel& model,
                                    const SimOptions& opts,
                                    const Tolerances& tol) {
  auto costs = simulate_subjective_costs(spec, player, {strategy}, model, opts, tol);
  SimulationBatch batch;
  batch.seed = opts.seed;
  batch.paths = opts.paths;
  batch.horizon = opts.horizon > 0 ? opts.horizon : default_horizon(spec, tol);
  batch.cost.push_back(std::move(costs[0]));
  double s = 0.0;
  for (double c : batch.cost[0]) s += c;
  const double m = s / opts.paths;
  double q = 0.0;
  for (double c : batch.cost[0]) q += (c - m) * (c - m);
  batch.cost_mean.push_back(m);
  batch.cost_stderr.push_back(
      opts.paths > 1 ? std::sqrt(q / (opts.paths - 1) / opts.paths) : 0.0);
  return batch;
}

SimulationBatch simulate_meanfield(const GameSpec& spec,
                                   const StrategyProfile& profile,
                                   int population, const SimOptions& opts,
                                   const PlayerStrategy* deviator,
                                   const Tolerances& tol) {
  check_gaussian(spec.noise);
  if (!spec.mean_field)
    throw SimulationError("simulate_meanfield requires a mean-field spec");
  if (population < 1)
    throw SimulationError("population must be at least 1");
  const PlayerSpec& p = spec.players[0];
  const int nx = p.nx();
  const int ny = spec.environment.ny();
  const Matrix& E1 = spec.environment.E1[0];
  const Matrix& E2 = spec.environment.E2[0];
  const int H = opts.horizon > 0 ? opts.horizon : default_horizon(spec, tol);
  const PlayerStrategy& base = profile.players[0];

  const DimensionTable dims = stack_dimensions(spec);
  const int xo = dims.x_offset[0];
  const GaussianSampler own_x0(spec.noise.x0_mean.segment(xo, nx),
                               spec.noise.x0_cov.block(xo, xo, nx, nx));
  const GaussianSampler own_w(spec.noise.w_mean.segment(xo, nx),
                              spec.noise.w_cov.block(xo, xo, nx, nx));
  const GaussianSampler xi_sampler(spec.noise.xi_mean, spec.noise.xi_cov);

  SimulationBatch batch;
  batch.seed = opts.seed;
  batch.paths = opts.paths;
  batch.horizon = H;
  const int tracked = population >= 2 ? 2 : 1;  // agents 0 and 1
  batch.cost.assign(static_cast<size_t>(tracked),
                    std::vector<double>(static_cast<size_t>(opts.paths), 0.0));

  const int blocks = (opts.paths + kBlockSize - 1) / kBlockSize;
  std::vector<BlockMoments> y_blocks(static_cast<size_t>(blocks));
  std::vector<BlockMoments> xbar_blocks(static_cast<size_t>(blocks));
  for (auto& b : y_blocks) b.init(H, ny, true);
  for (auto& b : xbar_blocks) b.init(H, nx, true);

  if (opts.store_trajectories) {
    batch.trajectories.emplace();
    batch.trajectories->y.resize(static_cast<size_t>(opts.paths));
  }

  parallel_blocks(opts.paths, opts.workers, [&](int block, int begin, int end) {
    std::vector<Vector> x(static_cast<size_t>(population));
    std::vector<Vector> saved_x(static_cast<size_t>(tracked));
    std::vector<Vector> saved_u(static_cast<size_t>(tracked));
    for (int path = begin; path < end; ++path) {
      PathRng rng(opts.seed, kPurposeMeanField, static_cast<uint64_t>(path));
      for (int j = 0; j < population; ++j)
        x[static_cast<size_t>(j)] = own_x0.sample(rng);
      double discount = 1.0;
      Matrix trajY;
      if (opts.store_trajectories) trajY.setZero(H, ny);

      for (int t = 0; t < H; ++t) {
        const Vector xi_draw = xi_sampler.sample(rng);
        Vector avg = Vector::Zero(ny);
        Vector xbar = Vector::Zero(nx);
        for (int j = 0; j < population; ++j) {
          const Vector xj = x[static_cast<size_t>(j)];
          const PlayerStrategy& strat =
              (deviator != nullptr && j == 0) ? *deviator : base;
          const Vector uj = strat.F_at(t) * xj + strat.H_at(t);
          avg += E1 * uj + E2 * xj;
          xbar += xj;
          if (j < tracked) {
            saved_x[static_cast<size_t>(j)] = xj;
            saved_u[static_cast<size_t>(j)] = uj;
          }
          x[static_cast<size_t>(j)] = p.A * xj + p.B * uj + own_w.sample(rng);
          check_overflow(x[static_cast<size_t>(j)], path, t, tol);
        }
        const Vector y = avg / population + xi_draw;
        xbar /= population;
        y_blocks[static_cast<size_t>(block)].add(t, y);
        xbar_blocks[static_cast<size_t>(block)].add(t, xbar);
        if (opts.store_trajectories) trajY.row(t) = y.transpose();

        for (int j = 0; j < tracked; ++j)
          batch.cost[static_cast<size_t>(j)][static_cast<size_t>(path)] +=
              discount * stage_cost(p, t, saved_x[static_cast<size_t>(j)],
                                    saved_u[static_cast<size_t>(j)], y);
        discount *= p.beta;
      }
      if (opts.store_trajectories)
        batch.trajectories->y[static_cast<size_t>(path)] = std::move(trajY);
    }
  });

  batch.y_stats = reduce_moments(y_blocks, H, ny, opts.paths);
  batch.X_stats = reduce_moments(xbar_blocks, H, nx, opts.paths);
  batch.cost_mean.resize(static_cast<size_t>(tracked));
  batch.cost_stderr.resize(static_cast<size_t>(tracked));
  for (int j = 0; j < tracked; ++j) {
    double s = 0.0;
    for (double c : batch.cost[static_cast<size_t>(j)]) s += c;
    const double m = s / opts.paths;
    double q = 0.0;
    for (double c : batch.cost[static_cast<size_t>(j)]) q += (c - m) * (c - m);
    batch.cost_mean[static_cast<size_t>(j)] = m;
    batch.cost_stderr[static_cast<size_t>(j)] =
        opts.paths > 1 ? std::sqrt(q / (opts.paths - 1) / opts.paths) : 0.0;
  }
  return batch;
}

}  // namespace sebeu
