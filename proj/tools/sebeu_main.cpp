// Command-line front end: scenario ingestion, pipeline orchestration, and
// report/CSV emission. Exit codes: 0 success, 1 assumption or verification
// failure, 2 input error.

#include "sebeu/artifacts.hpp"
#include "sebeu/env_fixed_point.hpp"
#include "sebeu/estimator.hpp"
#include "sebeu/game_model.hpp"
#include "sebeu/lq_synthesis.hpp"
#include "sebeu/scenario.hpp"
#include "sebeu/simulator.hpp"
#include "sebeu/verifier.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace sebeu;

namespace {

constexpr const char* kVersion = "sebeu 0.1.0";

struct RunConfig {
  std::string scenario;
  std::string artifacts;
  std::string out;
  uint64_t seed = 1;
  int paths = 1000;
  int horizon = 0;
  int workers = 0;
  int population = 10000;
  bool dump_trajectories = false;
  std::string n_list = "2,8,32,128";
  Tolerances tol;
};

void add_tolerance_flags(CLI::App* cmd, Tolerances& tol) {
  cmd->add_option("--tol.pd", tol.pd_tol,
                  "smallest eigenvalue for positive definiteness")
      ->capture_default_str();
  cmd->add_option("--tol.psd", tol.psd_tol, "covariance semidefiniteness slack")
      ->capture_default_str();
  cmd->add_option("--tol.s_cond_cap", tol.s_cond_cap,
                  "condition cap on the control-weight solves")
      ->capture_default_str();
  cmd->add_option("--tol.are_delta", tol.are_delta,
                  "step tolerance of the stationary Riccati iteration")
      ->capture_default_str();
  cmd->add_option("--tol.are_residual", tol.are_residual,
                  "required residual of the stationary Riccati solution")
      ->capture_default_str();
  cmd->add_option("--tol.g_tail", tol.g_tail_rel,
                  "relative truncation threshold of the lag-gain series")
      ->capture_default_str();
  cmd->add_option("--tol.fp_cond_cap", tol.fp_cond_cap,
                  "condition cap on the prediction fixed-point systems")
      ->capture_default_str();
  cmd->add_option("--tol.fp_delta", tol.fp_delta,
                  "coefficient change across truncation doublings")
      ->capture_default_str();
  cmd->add_option("--tol.innovation_cond_cap", tol.innovation_cond_cap,
                  "condition cap on the innovation covariance")
      ->capture_default_str();
  cmd->add_option("--tol.ss_delta", tol.ss_delta,
                  "step tolerance of the steady-state covariance iteration")
      ->capture_default_str();
  cmd->add_option("--tol.ss_residual", tol.ss_residual,
                  "required residual of the steady-state covariance")
      ->capture_default_str();
  cmd->add_option("--tol.overflow_cap", tol.overflow_cap,
                  "simulated state norm cap before declaring instability")
      ->capture_default_str();
  cmd->add_option("--tol.cost_tail", tol.cost_tail,
                  "discount tail target selecting the simulation horizon")
      ->capture_default_str();
  cmd->add_option("--tol.gain_identity", tol.gain_identity_tol,
                  "gain identity residual bound")
      ->capture_default_str();
  cmd->add_option("--tol.nesting", tol.nesting_tol,
                  "prediction nesting residual bound")
      ->capture_default_str();
  cmd->add_option("--tol.meanfield_residual", tol.meanfield_residual,
                  "stationary mean equation residual bound")
      ->capture_default_str();
  cmd->add_option("--tol.gap_sigma", tol.gap_sigma,
                  "allowed deviation-gap z-score")
      ->capture_default_str();
  cmd->add_option("--tol.moment_z", tol.moment_z,
                  "moment consistency z-score bound")
      ->capture_default_str();
}

ordered_json make_manifest(const std::string& command, const RunConfig& cfg,
                           const std::vector<std::string>& artifacts) {
  ordered_json m;
  m["tool"] = kVersion;
  m["command"] = command;
  if (!cfg.scenario.empty()) {
    m["scenario"] = fs::path(cfg.scenario).filename().string();
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0')
         << fnv1a_file(cfg.scenario);
    m["scenario_hash"] = hash.str();
  }
  m["seed"] = cfg.seed;
  m["paths"] = cfg.paths;
  m["horizon"] = cfg.horizon;
  m["workers"] = cfg.workers;
  m["tolerances"] = tolerances_to_json(cfg.tol);
  m["artifacts"] = artifacts;
  return m;
}

struct Pipeline {
  GameSpec spec;
  DimensionTable dims;
  GainsArtifact gains;
  EnvFixedPoint fp;
  std::shared_ptr<ClosedLoopModel> model;
  MeanFieldPoint mf;
  StrategyProfile profile;
};

std::vector<std::vector<Vector>> player_w_means(const GameSpec& spec,
                                                const DimensionTable& dims) {
  const int T = spec.horizon.infinite ? 1 : spec.horizon.T;
  std::vector<std::vector<Vector>> out(spec.players.size());
  for (size_t i = 0; i < spec.players.size(); ++i) {
    for (int t = 0; t < T; ++t)
      out[i].push_back(spec.noise.w_mean_at(t).segment(
          dims.x_offset[i], dims.player_x[i]));
  }
  return out;
}

// validate -> synthesis -> aggregate -> fixed point -> estimator model.
Pipeline run_solve(const GameSpec& spec, const Tolerances& tol) {
  Pipeline pl;
  pl.spec = spec;
  const ValidationReport report = validate(spec, tol);
  if (!report.valid())
    throw Error("model data violates the standing assumptions:\n" +
                report.to_string());
  pl.dims = stack_dimensions(spec);
  const auto w_means = player_w_means(spec, pl.dims);

  if (spec.mean_field) {
    pl.gains.infinite = true;
    pl.gains.stationary.push_back(are_solve(spec.players[0], w_means[0][0], tol));
    pl.mf = solve_meanfield(spec, pl.gains.stationary[0], tol);
    pl.profile = make_meanfield_profile(spec, pl.gains.stationary[0], pl.mf.y0);
    return pl;
  }

  if (spec.horizon.infinite) {
    pl.gains.infinite = true;
    for (size_t i = 0; i < spec.players.size(); ++i)
      pl.gains.stationary.push_back(
          are_solve(spec.players[i], w_means[i][0], tol));
    const AggregatedDynamics agg = aggregate(spec, pl.gains.stationary);
    pl.fp = solve_infinite(agg, spec.noise.x0_mean, tol);
    pl.model = std::make_shared<ClosedLoopModel>(make_closed_loop(agg, pl.fp));
    pl.profile = make_strategy_profile(spec, pl.gains.stationary, pl.fp, pl.model);
  } else {
    pl.gains.infinite = false;
    for (size_t i = 0; i < spec.players.size(); ++i)
      pl.gains.finite.push_back(
          riccati_backward(spec.players[i], spec.horizon.T, w_means[i], tol));
    const AggregatedDynamics agg = aggregate(spec, pl.gains.finite);
    pl.fp = solve_finite(agg, tol);
    pl.model = std::make_shared<ClosedLoopModel>(make_closed_loop(agg, pl.fp));
    pl.profile = make_strategy_profile(spec, pl.gains.finite, pl.fp, pl.model);
  }
  return pl;
}

Pipeline load_artifacts(const GameSpec& spec, const fs::path& dir) {
  Pipeline pl;
  pl.spec = spec;
  pl.dims = stack_dimensions(spec);
  if (!fs::exists(dir / "gains.json"))
    throw InputError("missing artifacts: run solve first (no gains.json in " +
                     dir.string() + ")");
  pl.gains = gains_from_json(read_json(dir / "gains.json"));
  if (spec.mean_field) {
    pl.mf = meanfield_from_json(read_json(dir / "meanfield.json"));
    pl.profile = make_meanfield_profile(spec, pl.gains.stationary[0], pl.mf.y0);
    return pl;
  }
  pl.fp = fixed_point_from_json(read_json(dir / "fixed_point.json"));
  pl.model = std::make_shared<ClosedLoopModel>(
      model_from_json(read_json(dir / "model.json")));
  if (pl.gains.infinite)
    pl.profile = make_strategy_profile(spec, pl.gains.stationary, pl.fp, pl.model);
  else
    pl.profile = make_strategy_profile(spec, pl.gains.finite, pl.fp, pl.model);
  return pl;
}

int cmd_solve(const RunConfig& cfg) {
  const GameSpec spec = load_scenario(cfg.scenario);
  const Pipeline pl = run_solve(spec, cfg.tol);
  fs::create_directories(cfg.out);
  std::vector<std::string> artifacts;
  if (pl.gains.infinite)
    write_json(fs::path(cfg.out) / "gains.json", gains_to_json(pl.gains.stationary));
  else
    write_json(fs::path(cfg.out) / "gains.json", gains_to_json(pl.gains.finite));
  artifacts.push_back("gains.json");
  if (spec.mean_field) {
    write_json(fs::path(cfg.out) / "meanfield.json", meanfield_to_json(pl.mf));
    artifacts.push_back("meanfield.json");
  } else {
    write_json(fs::path(cfg.out) / "fixed_point.json", fixed_point_to_json(pl.fp));
    write_json(fs::path(cfg.out) / "model.json", model_to_json(*pl.model));
    artifacts.push_back("fixed_point.json");
    artifacts.push_back("model.json");
  }
  write_json(fs::path(cfg.out) / "manifest.json",
             make_manifest("solve", cfg, artifacts));
  std::cout << "solve: wrote " << artifacts.size() + 1 << " artifacts to "
            << cfg.out << "\n";
  return 0;
}

int cmd_simulate(const RunConfig& cfg) {
  const GameSpec spec = load_scenario(cfg.scenario);
  const Pipeline pl = load_artifacts(spec, cfg.artifacts);
  fs::create_directories(cfg.out);

  SimOptions opts;
  opts.paths = cfg.paths;
  opts.seed = cfg.seed;
  opts.horizon = cfg.horizon;
  opts.workers = cfg.workers;
  opts.store_trajectories = cfg.dump_trajectories;

  RunConfig echo = cfg;
  std::vector<std::string> artifacts;
  SimulationBatch batch;
  if (spec.mean_field) {
    batch = simulate_meanfield(spec, pl.profile, cfg.population, opts, nullptr,
                               cfg.tol);
  } else {
    batch = simulate_objective(spec, pl.profile, opts, cfg.tol);
    const int mh = batch.horizon;
    const MomentTrajectory moments = moment_propagation(*pl.model, mh, cfg.tol);
    write_text(fs::path(cfg.out) / "moments.csv", moments_csv(moments, pl.dims));
    artifacts.push_back("moments.csv");
  }
  echo.horizon = batch.horizon;
  write_text(fs::path(cfg.out) / "trajectories.csv",
             batch_summary_csv(batch, pl.dims));
  artifacts.push_back("trajectories.csv");
  write_text(fs::path(cfg.out) / "costs.csv", costs_csv(batch));
  artifacts.push_back("costs.csv");
  if (cfg.dump_trajectories && !spec.mean_field) {
    write_trajectory_dump(fs::path(cfg.out) / "trajectories.bin", batch, pl.dims);
    artifacts.push_back("trajectories.bin");
  }
  write_json(fs::path(cfg.out) / "manifest.json",
             make_manifest("simulate", echo, artifacts));
  std::cout << "simulate: " << cfg.paths << " paths over " << batch.horizon
            << " stages";
  for (size_t i = 0; i < batch.cost_mean.size(); ++i)
    std::cout << "  J[" << i << "]=" << batch.cost_mean[i] << "±"
              << batch.cost_stderr[i];
  std::cout << "\n";
  return 0;
}

int cmd_verify(const RunConfig& cfg) {
  const GameSpec spec = load_scenario(cfg.scenario);
  const Pipeline pl = load_artifacts(spec, cfg.artifacts);
  fs::create_directories(cfg.out);

  VerificationReport report;
  if (spec.mean_field) {
    MeanFieldCheckOptions opts;
    opts.seed = cfg.seed;
    opts.paths = std::max(8, cfg.paths / 1000);
    opts.workers = cfg.workers;
    if (cfg.horizon > 0) opts.horizon = cfg.horizon;
    report = check_meanfield_nash(spec, pl.profile, pl.gains.stationary[0],
                                  pl.mf, opts, cfg.tol);
  } else {
    const Pipeline fresh = run_solve(spec, cfg.tol);  // re-synthesized optimum
    const AggregatedDynamics agg =
        pl.gains.infinite ? aggregate(spec, pl.gains.stationary)
                          : aggregate(spec, pl.gains.finite);
    report = pl.gains.infinite
                 ? check_identities(spec, pl.gains.stationary, agg, pl.fp,
                                    cfg.seed, cfg.tol)
                 : check_identities(spec, pl.gains.finite, agg, pl.fp, cfg.seed,
                                    cfg.tol);
    SebeuCheckOptions opts;
    opts.paths = cfg.paths;
    opts.seed = cfg.seed;
    opts.workers = cfg.workers;
    if (cfg.horizon > 0) opts.moment_horizon = cfg.horizon;
    report.merge(check_sebeu(spec, pl.profile, fresh.profile, *pl.model, opts,
                             cfg.tol));
  }
  write_json(fs::path(cfg.out) / "report.json", report.to_json());
  write_json(fs::path(cfg.out) / "manifest.json",
             make_manifest("verify", cfg, {"report.json"}));
  std::cout << report.table();
  return report.all_passed() ? 0 : 1;
}

int cmd_example(const RunConfig& cfg) {
  ExampleSpec ex;
  if (!cfg.scenario.empty()) {
    const ordered_json j = read_json(cfg.scenario);
    auto get = [&](const char* key, double& field) {
      if (j.contains(key)) field = j.at(key).get<double>();
    };
    get("A0", ex.A0); get("B0", ex.B0); get("C0", ex.C0);
    get("A1", ex.A1); get("B1", ex.B1); get("C1", ex.C1);
    get("Q0", ex.Q0); get("R0", ex.R0); get("K0", ex.K0); get("L0", ex.L0);
    get("Q1", ex.Q1); get("R1", ex.R1); get("K1", ex.K1); get("L1", ex.L1);
    get("Q2", ex.Q2); get("beta", ex.beta);
    get("var_x0", ex.var_x0); get("var_w0", ex.var_w0); get("var_w1", ex.var_w1);
    get("var_xi0", ex.var_xi0); get("var_xi1", ex.var_xi1);
  }
  std::vector<int> Ns;
  {
    std::stringstream ss(cfg.n_list);
    std::string tok;
    while (std::getline(ss, tok, ',')) Ns.push_back(std::stoi(tok));
    if (Ns.empty()) throw InputError("--N-list is empty");
  }

  fs::create_directories(cfg.out);
  std::ostringstream csv;
  csv << "N,F0,F1,G1N,G1N_limit,G1N_gap,br_F0,br_F1,br_G1,br_F10,"
         "br_F0_gap,br_F1_gap,br_G1_gap,br_F10_gap,nash_gap,nash_gap_se\n";
  std::vector<double> xs, g1_gaps, br_gaps;
  bool exists_everywhere = true;
  for (int N : Ns) {
    ExampleSpec e = ex;
    e.N = N;
    const ExampleGains g = example_gains(e);
    if (!g.exists) {
      exists_everywhere = false;
      std::cout << "N=" << N
                << ": equilibrium does not exist uniquely (pivot "
                << g.existence_pivot << " singular)\n";
      continue;
    }
    const ExampleBestResponse br = example_best_response(e);
    const NashGapEstimate nash = example_nash_gap(e, cfg.paths, cfg.seed);
    const double g1_gap = std::abs(g.G1N - g.G1N_limit);
    const double br_gap = std::max({std::abs(br.F0 - br.F0_limit),
                                    std::abs(br.F1 - br.F1_limit),
                                    std::abs(br.G1 - br.G1_limit),
                                    std::abs(br.F10 - br.F10_limit)});
    csv << N << "," << g.F0 << "," << g.F1 << "," << g.G1N << ","
        << g.G1N_limit << "," << g1_gap << "," << br.F0 << "," << br.F1 << ","
        << br.G1 << "," << br.F10 << "," << std::abs(br.F0 - br.F0_limit) << ","
        << std::abs(br.F1 - br.F1_limit) << "," << std::abs(br.G1 - br.G1_limit)
        << "," << std::abs(br.F10 - br.F10_limit) << "," << nash.gap << ","
        << nash.se << "\n";
    xs.push_back(static_cast<double>(N));
    g1_gaps.push_back(g1_gap);
    br_gaps.push_back(br_gap);
  }
  write_text(fs::path(cfg.out) / "example.csv", csv.str());
  write_json(fs::path(cfg.out) / "manifest.json",
             make_manifest("example", cfg, {"example.csv"}));
  if (!exists_everywhere) return 1;
  if (xs.size() >= 2) {
    std::cout << "G1N gap slope:          " << fit_loglog_slope(xs, g1_gaps)
              << " (expected -1)\n"
              << "best-response gap slope: " << fit_loglog_slope(xs, br_gaps)
              << " (expected -1)\n";
  }
  std::cout << "example: wrote " << (fs::path(cfg.out) / "example.csv").string()
            << "\n";
  return 0;
}

int cmd_validate(const RunConfig& cfg) {
  const GameSpec spec = load_scenario(cfg.scenario);
  const ValidationReport report = validate(spec, cfg.tol);
  if (report.valid()) {
    std::cout << "valid\n";
    return 0;
  }
  std::cout << report.to_string();
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subjective-equilibrium synthesis and verification for "
               "linear-quadratic stochastic dynamic games"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  RunConfig cfg;
  auto add_common = [&](CLI::App* cmd, bool scenario_required) {
    auto* s = cmd->add_option("--scenario", cfg.scenario, "scenario JSON file");
    if (scenario_required) s->required();
    cmd->add_option("--seed", cfg.seed, "master seed")->capture_default_str();
    cmd->add_option("--workers", cfg.workers,
                    "worker threads (0 = hardware)")->capture_default_str();
    add_tolerance_flags(cmd, cfg.tol);
  };

  CLI::App* solve = app.add_subcommand("solve",
      "synthesize gains, equilibrium coefficients, and the estimator model");
  add_common(solve, true);
  solve->add_option("--out", cfg.out, "output directory")->required();

  CLI::App* simulate = app.add_subcommand("simulate",
      "Monte Carlo of the objective closed loop under the solved strategies");
  add_common(simulate, true);
  simulate->add_option("--artifacts", cfg.artifacts, "solve output directory")
      ->required();
  simulate->add_option("--out", cfg.out, "output directory")->required();
  simulate->add_option("--paths", cfg.paths, "Monte Carlo paths")
      ->capture_default_str();
  simulate->add_option("--horizon", cfg.horizon,
                       "simulation horizon (0 = default)")
      ->capture_default_str();
  simulate->add_option("--population", cfg.population,
                       "population size (mean-field scenarios)")
      ->capture_default_str();
  simulate->add_flag("--dump-trajectories", cfg.dump_trajectories,
                     "write the binary trajectory dump");

  CLI::App* verify = app.add_subcommand("verify",
      "run the equilibrium certificates; nonzero exit iff any check fails");
  add_common(verify, true);
  verify->add_option("--artifacts", cfg.artifacts, "solve output directory")
      ->required();
  verify->add_option("--out", cfg.out, "output directory")->required();
  verify->add_option("--paths", cfg.paths, "Monte Carlo paths")
      ->capture_default_str();
  verify->add_option("--horizon", cfg.horizon,
                     "moment-comparison horizon (0 = default)")
      ->capture_default_str();

  CLI::App* example = app.add_subcommand("example",
      "two-stage identical-player study: gains, best responses, scaling in N");
  add_common(example, false);
  example->add_option("--out", cfg.out, "output directory")->required();
  example->add_option("--paths", cfg.paths, "Monte Carlo paths")
      ->capture_default_str();
  example->add_option("--N-list", cfg.n_list, "comma-separated population sizes")
      ->capture_default_str();

  CLI::App* validate_cmd = app.add_subcommand("validate",
      "check a scenario against the standing model assumptions");
  add_common(validate_cmd, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(cfg);
    if (simulate->parsed()) return cmd_simulate(cfg);
    if (verify->parsed()) return cmd_verify(cfg);
    if (example->parsed()) return cmd_example(cfg);
    if (validate_cmd->parsed()) return cmd_validate(cfg);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
