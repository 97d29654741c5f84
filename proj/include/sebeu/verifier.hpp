#pragma once

#include "sebeu/common.hpp"
#include "sebeu/env_fixed_point.hpp"
#include "sebeu/estimator.hpp"
#include "sebeu/simulator.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace sebeu {

struct Check {
  std::string name;
  std::string property;  // what the check certifies, in plain terms
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerificationReport {
  std::vector<Check> checks;

  bool all_passed() const;
  void add(Check c) { checks.push_back(std::move(c)); }
  void merge(const VerificationReport& other);
  const Check* find(const std::string& name) const;
  std::string table() const;
  nlohmann::ordered_json to_json() const;
};

// Structural identities of the synthesis and fixed-point outputs: the gain
// identity R F + beta B'M(A + BF) = 0 at every stage, the nesting identity of
// the prediction coefficients under information refinement, the uniqueness
// certificates of the linear systems, and (stationary case) the ARE residual
// and closed-loop radius.
VerificationReport check_identities(const GameSpec& spec,
                                    const std::vector<FiniteGainSchedule>& gains,
                                    const AggregatedDynamics& agg,
                                    const EnvFixedPoint& fp, uint64_t seed,
                                    const Tolerances& tol = {});
VerificationReport check_identities(const GameSpec& spec,
                                    const std::vector<StationaryGains>& gains,
                                    const AggregatedDynamics& agg,
                                    const EnvFixedPoint& fp, uint64_t seed,
                                    const Tolerances& tol = {});

struct SebeuCheckOptions {
  int paths = 10000;
  uint64_t seed = 1;
  int workers = 0;
  int moment_horizon = 20;   // stages compared for distributional consistency
  int random_directions = 20;
  std::vector<double> magnitudes = {0.01, 0.05, 0.2};
};

// Certifies both equilibrium conditions by Monte Carlo:
//  (i) no deviation in the declared family improves the subjective cost
//      beyond statistical noise (common random numbers, paired gaps);
// (ii) the objective closed-loop environment moments match the exogenous
//      model's analytic moments (z-scores per stage and component).
// `reference` supplies the structured "re-synthesized optimum" deviation;
// pass the profile itself when testing the constructed equilibrium.
VerificationReport check_sebeu(const GameSpec& spec,
                               const StrategyProfile& profile,
                               const StrategyProfile& reference,
                               const ClosedLoopModel& model,
                               const SebeuCheckOptions& opts,
                               const Tolerances& tol = {});

// Two-stage identical-player scenario: environment equals the population
// average of states plus noise, all primitives zero-mean Gaussian.
struct ExampleSpec {
  double A0 = 1.0, B0 = 1.0, C0 = 0.1;   // stage-0 player matrices
  double A1 = 1.0, B1 = 1.0, C1 = 0.1;   // stage-1
  double Q0 = 1.0, R0 = 1.0, K0 = 0.0, L0 = 0.0;
  double Q1 = 1.0, R1 = 1.0, K1 = 0.1, L1 = 0.1;
  double Q2 = 1.0;
  double beta = 1.0;
  double var_x0 = 1.0;
  double var_w0 = 0.5, var_w1 = 0.5;
  double var_xi0 = 1.0, var_xi1 = 0.5;
  int N = 2;
};

struct ExampleGains {
  double S1 = 0, F1 = 0, G11 = 0, M1 = 0;
  double S0 = 0, F0 = 0, G00 = 0, G01 = 0;
  double G1N = 0;        // feedback on y_0 at stage 1
  double G1N_limit = 0;  // G11 * C0
  bool exists = true;    // 1 - B0 G01 nonsingular
  double existence_pivot = 0;  // 1 - B0 G01
};

// Closed-form equilibrium gains of the two-stage scenario, recomputed from
// scratch (independent of the synthesis module) so the two routes can be
// cross-checked against each other.
ExampleGains example_gains(const ExampleSpec& ex);

struct ExampleBestResponse {
  double F0 = 0, F1 = 0, G1 = 0, F10 = 0;  // exact best-response gains
  double F0_limit = 0, F1_limit = 0, G1_limit = 0, F10_limit = 0;
};

// Exact best response of one player against the rest playing the equilibrium
// strategies, accounting for the player's own 1/N influence on the
// environment and the information it reveals.
ExampleBestResponse example_best_response(const ExampleSpec& ex);

struct NashGapEstimate {
  double gap = 0.0;  // mean(J_equilibrium - J_best_response), paired paths
  double se = 0.0;
};

// Objective-cost advantage of the exact best response over the equilibrium
// strategy for one player, everything else fixed; common random numbers.
NashGapEstimate example_nash_gap(const ExampleSpec& ex, int paths,
                                 uint64_t seed);

struct MeanFieldCheckOptions {
  std::vector<int> populations = {100, 1000, 10000};
  int paths = 64;
  int horizon = 20;
  uint64_t seed = 1;
  int workers = 0;
  int consistency_population = 10000;
};

VerificationReport check_meanfield_nash(const GameSpec& spec,
                                        const StrategyProfile& profile,
                                        const StationaryGains& gains,
                                        const MeanFieldPoint& mf,
                                        const MeanFieldCheckOptions& opts,
                                        const Tolerances& tol = {});

// Least-squares slope of log(y) against log(x).
double fit_loglog_slope(const std::vector<double>& x,
                        const std::vector<double>& y);

}  // namespace sebeu
