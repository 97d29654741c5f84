#include "sebeu/verifier.hpp"

#include "sebeu/lq_synthesis.hpp"
#include "support/fixtures.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>

using namespace sebeu;

TEST_CASE("identity checks pass on the solved finite pipeline") {
  const GameSpec spec = testing::reference_finite_spec(6);
  const auto pl = testing::solve_pipeline(spec);
  const VerificationReport report =
      check_identities(spec, pl.finite_gains, pl.agg, pl.fp, 1);
  INFO(report.table());
  CHECK(report.all_passed());
  // Re-running with the same seed flips no statuses.
  const VerificationReport again =
      check_identities(spec, pl.finite_gains, pl.agg, pl.fp, 1);
  for (size_t i = 0; i < report.checks.size(); ++i) {
    CHECK(report.checks[i].passed == again.checks[i].passed);
    CHECK(report.checks[i].measured == again.checks[i].measured);
  }
}

TEST_CASE("identity checks pass on the solved stationary pipeline") {
  const GameSpec spec = testing::reference_infinite_spec();
  const auto pl = testing::solve_pipeline(spec);
  const VerificationReport report =
      check_identities(spec, pl.stationary_gains, pl.agg, pl.fp, 1);
  INFO(report.table());
  CHECK(report.all_passed());
}

TEST_CASE("corrupted feedback gain fails the identity with the exact residual") {
  const GameSpec spec = testing::reference_finite_spec(4);
  auto pl = testing::solve_pipeline(spec);
  auto gains = pl.finite_gains;
  gains[0].F[0](0, 0) += 0.1;
  const VerificationReport report =
      check_identities(spec, gains, pl.agg, pl.fp, 1);
  const Check* c = report.find("gain_identity");
  REQUIRE(c != nullptr);
  CHECK_FALSE(c->passed);
  // Perturbation arithmetic: residual of F + d is exactly S d.
  const double expected = std::abs(gains[0].S[0](0, 0) * 0.1);
  CHECK(c->measured == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("two-stage example gains match the synthesis route") {
  // Documented configuration: A0=B0=1, C0=0.1, unit weights, beta=1,
  // no cost cross terms, unit variances, N=1.
  ExampleSpec ex;
  ex.A0 = 1.0; ex.B0 = 1.0; ex.C0 = 0.1;
  ex.A1 = 1.0; ex.B1 = 1.0; ex.C1 = 0.1;
  ex.Q0 = ex.Q1 = ex.Q2 = 1.0;
  ex.R0 = ex.R1 = 1.0;
  ex.K0 = ex.K1 = ex.L0 = ex.L1 = 0.0;
  ex.beta = 1.0;
  ex.var_x0 = 1.0;
  ex.var_xi0 = 1.0;
  ex.N = 1;
  const ExampleGains g = example_gains(ex);

  // Hand values: S1=2, F1=-0.5, G11=-0.05, M1=1.5, S0=2.5, F0=-0.6.
  CHECK(g.S1 == doctest::Approx(2.0));
  CHECK(g.F1 == doctest::Approx(-0.5));
  CHECK(g.G11 == doctest::Approx(-0.05));
  CHECK(g.M1 == doctest::Approx(1.5));
  CHECK(g.F0 == doctest::Approx(-0.6));
  CHECK(g.G1N == doctest::Approx(g.G11 * ((1.0 - 0.6) * 0.5 + 0.1)));

  // Cross-implementation oracle: the generic backward recursion on the same
  // player data reproduces F0, F1, G11 and the lag-1 coupling.
  PlayerSpec p;
  p.A = Matrix::Constant(1, 1, 1.0);
  p.B = Matrix::Constant(1, 1, 1.0);
  p.C = Matrix::Constant(1, 1, 0.1);
  p.Q_stage = Matrix::Constant(1, 1, 1.0);
  p.R = Matrix::Constant(1, 1, 1.0);
  p.K = Matrix::Zero(1, 1);
  p.L = Matrix::Zero(1, 1);
  p.Q_terminal = Matrix::Constant(1, 1, 1.0);
  p.beta = 1.0;
  const FiniteGainSchedule fg = riccati_backward(p, 2);
  CHECK(fg.F[0](0, 0) == doctest::Approx(g.F0).epsilon(1e-12));
  CHECK(fg.F[1](0, 0) == doctest::Approx(g.F1).epsilon(1e-12));
  CHECK(fg.G[1][0](0, 0) == doctest::Approx(g.G11).epsilon(1e-12));
  CHECK(fg.G[0][0](0, 0) == doctest::Approx(g.G00).epsilon(1e-12));
  CHECK(fg.G[0][1](0, 0) == doctest::Approx(g.G01).epsilon(1e-12));
  CHECK(fg.M[1](0, 0) == doctest::Approx(g.M1).epsilon(1e-12));
}

TEST_CASE("feedback on the observation converges to its limit at rate 1/N") {
  ExampleSpec ex;  // defaults carry nonzero K1, L1 couplings
  std::vector<double> Ns, gaps;
  for (int N = 2; N <= 1024; N *= 2) {
    ex.N = N;
    const ExampleGains g = example_gains(ex);
    REQUIRE(g.exists);
    Ns.push_back(static_cast<double>(N));
    gaps.push_back(std::abs(g.G1N - g.G1N_limit));
  }
  const double slope = fit_loglog_slope(Ns, gaps);
  CHECK(std::abs(slope + 1.0) < 0.05);

  SUBCASE("overwhelming observation noise removes the estimator term") {
    ex.N = 3;
    ex.var_xi0 = 1e12;
    const ExampleGains g = example_gains(ex);
    CHECK(std::abs(g.G1N - g.G1N_limit) < 1e-10);
  }
}

TEST_CASE("single-opponent-free best response degenerates cleanly") {
  ExampleSpec ex;
  ex.N = 1;
  const ExampleGains g = example_gains(ex);
  const ExampleBestResponse br = example_best_response(ex);
  // No other agents: conditioning on the observation reveals nothing about
  // them, the observation feedback and the memory term vanish.
  CHECK(br.G1 == doctest::Approx(0.0));
  CHECK(br.F10 == doctest::Approx(0.0));
  // Single agent fully internalizes its own influence on y.
  const double P1 = ex.K1 + ex.beta * ex.B1 * ex.Q2 * ex.C1;
  CHECK(br.F1 ==
        doctest::Approx(-(ex.beta * ex.B1 * ex.Q2 * ex.A1 + P1) / g.S1));
}

TEST_CASE("best-response gains approach the equilibrium gains at rate 1/N") {
  ExampleSpec ex;
  std::vector<double> Ns, gaps;
  for (int N = 2; N <= 256; N *= 2) {
    ex.N = N;
    const ExampleBestResponse br = example_best_response(ex);
    const double gap = std::max({std::abs(br.F0 - br.F0_limit),
                                 std::abs(br.F1 - br.F1_limit),
                                 std::abs(br.G1 - br.G1_limit),
                                 std::abs(br.F10 - br.F10_limit)});
    Ns.push_back(static_cast<double>(N));
    gaps.push_back(gap);
  }
  const double slope = fit_loglog_slope(Ns, gaps);
  CHECK(std::abs(slope + 1.0) < 0.1);
}

TEST_CASE("best response improves on the equilibrium strategy, less so as N grows") {
  // The paired estimator measures J(equilibrium) - J(best response) for the
  // focal player in the true loop; it must be nonnegative up to noise and
  // shrink as the population grows.
  ExampleSpec ex;
  ex.N = 4;
  const NashGapEstimate base = example_nash_gap(ex, 400000, 12345);
  CHECK(base.gap > -2.0 * base.se);
  ExampleSpec big = ex;
  big.N = 64;
  const NashGapEstimate far = example_nash_gap(big, 400000, 12345);
  CHECK(far.gap <=
        base.gap + 2.0 * std::sqrt(base.se * base.se + far.se * far.se));
}

TEST_CASE("equilibrium profile passes the full certificate suite") {
  const GameSpec spec = testing::reference_finite_spec(6);
  const auto pl = testing::solve_pipeline(spec);
  SebeuCheckOptions opts;
  opts.paths = 4000;
  opts.seed = 9;
  opts.moment_horizon = 6;
  const VerificationReport report =
      check_sebeu(spec, pl.profile, pl.profile, *pl.model, opts);
  INFO(report.table());
  CHECK(report.all_passed());
}

TEST_CASE("zeroed feedback is exposed by the deviation suite") {
  const GameSpec spec = testing::reference_finite_spec(6);
  const auto pl = testing::solve_pipeline(spec);
  StrategyProfile corrupted = pl.profile;
  for (auto& F : corrupted.players[0].F) F.setZero();

  SebeuCheckOptions opts;
  opts.paths = 4000;
  opts.seed = 9;
  opts.moment_horizon = 6;
  const VerificationReport report =
      check_sebeu(spec, corrupted, pl.profile, *pl.model, opts);
  const Check* c = report.find("subjective_optimality.player0");
  REQUIRE(c != nullptr);
  CHECK_FALSE(c->passed);
  CHECK(c->measured < -5.0);  // improvement found far beyond noise
}

TEST_CASE("mean-field certificate suite passes") {
  GameSpec spec;
  spec.mean_field = true;
  spec.horizon = Horizon::endless();
  PlayerSpec p;
  p.A = Matrix::Constant(1, 1, 0.7);
  p.B = Matrix::Constant(1, 1, 1.0);
  p.C = Matrix::Zero(1, 1);
  p.Q_stage = Matrix::Constant(1, 1, 1.0);
  p.R = Matrix::Constant(1, 1, 1.0);
  p.K = Matrix::Constant(1, 1, 0.05);
  p.L = Matrix::Constant(1, 1, 0.05);
  p.beta = 0.9;
  spec.players.push_back(p);
  spec.environment.A0 = Matrix(0, 0);
  spec.environment.D = Matrix(1, 0);
  spec.environment.B1 = {Matrix::Zero(0, 1)};
  spec.environment.B2 = {Matrix::Zero(0, 1)};
  spec.environment.E1 = {Matrix::Constant(1, 1, 0.1)};
  spec.environment.E2 = {Matrix::Constant(1, 1, 0.3)};
  spec.noise.x0_mean = Vector::Zero(1);
  spec.noise.x0_cov = Matrix::Constant(1, 1, 1.0);
  spec.noise.w_mean = Vector::Zero(1);
  spec.noise.w_cov = Matrix::Constant(1, 1, 0.25);
  spec.noise.xi_mean = Vector::Zero(1);
  spec.noise.xi_cov = Matrix::Constant(1, 1, 0.5);
  REQUIRE(validate(spec).valid());

  const StationaryGains g = are_solve(spec.players[0], Vector::Zero(1));
  const MeanFieldPoint mf = solve_meanfield(spec, g);
  const StrategyProfile profile = make_meanfield_profile(spec, g, mf.y0);

  MeanFieldCheckOptions opts;
  opts.populations = {100, 1000, 10000};
  opts.paths = 32;
  opts.horizon = 12;
  opts.seed = 4;
  opts.consistency_population = 2000;
  const VerificationReport report =
      check_meanfield_nash(spec, profile, g, mf, opts);
  INFO(report.table());
  CHECK(report.all_passed());
}

TEST_CASE("verification reports serialize with named tolerances") {
  VerificationReport report;
  report.add({"sample", "a property", true, 0.5, 1.0, "detail"});
  report.add({"other", "another property", false, 2.0, 1.0, ""});
  CHECK_FALSE(report.all_passed());
  const auto j = report.to_json();
  CHECK(j.at("checks").size() == 2);
  CHECK(j.at("all_passed") == false);
  const std::string table = report.table();
  CHECK(table.find("[PASS] sample") != std::string::npos);
  CHECK(table.find("[FAIL] other") != std::string::npos);
}
