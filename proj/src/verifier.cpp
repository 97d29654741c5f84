#include "sebeu/verifier.hpp"

#include "sebeu/lq_synthesis.hpp"
#include "sebeu/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace sebeu {

namespace {

constexpr uint64_t kPurposeDeviationDirs = 0xDE;
constexpr uint64_t kPurposeNesting = 0x4E;
constexpr uint64_t kPurposeExample = 0xE4;

double safe_z(double gap, double se) {
  if (se > 0.0) return gap / se;
  return gap == 0.0 ? 0.0 : (gap > 0.0 ? 1e300 : -1e300);
}

struct GapStat {
  double gap = 0.0;
  double se = 0.0;
};

GapStat paired_gap(const std::vector<double>& dev, const std::vector<double>& base) {
  GapStat g;
  const size_t P = base.size();
  for (size_t p = 0; p < P; ++p) g.gap += dev[p] - base[p];
  g.gap /= static_cast<double>(P);
  double q = 0.0;
  for (size_t p = 0; p < P; ++p) {
    const double d = dev[p] - base[p] - g.gap;
    q += d * d;
  }
  if (P > 1)
    g.se = std::sqrt(q / static_cast<double>(P - 1) / static_cast<double>(P));
  return g;
}

}  // namespace

bool VerificationReport::all_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

void VerificationReport::merge(const VerificationReport& other) {
  checks.insert(checks.end(), other.checks.begin(), other.checks.end());
}

const Check* VerificationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

std::string VerificationReport::table() const {
  std::ostringstream os;
  size_t width = 4;
  for (const auto& c : checks) width = std::max(width, c.name.size());
  for (const auto& c : checks) {
    os << (c.passed ? "[PASS] " : "[FAIL] ") << std::left
       << std::setw(static_cast<int>(width) + 2) << c.name << std::scientific
       << std::setprecision(3) << "measured=" << c.measured
       << "  tolerance=" << c.tolerance << "  " << c.property;
    if (!c.detail.empty()) os << "  (" << c.detail << ")";
    os << "\n";
  }
  return os.str();
}

nlohmann::ordered_json VerificationReport::to_json() const {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    nlohmann::ordered_json j;
    j["name"] = c.name;
    j["passed"] = c.passed;
    j["measured"] = c.measured;
    j["tolerance"] = c.tolerance;
    j["property"] = c.property;
    if (!c.detail.empty()) j["detail"] = c.detail;
    arr.push_back(std::move(j));
  }
  nlohmann::ordered_json out;
  out["checks"] = std::move(arr);
  out["all_passed"] = all_passed();
  return out;
}

namespace {

// Propagates the conditional-mean system from stage k with initial estimate
// Xhat, using the affine coefficients of family k; returns the estimates
// Xhat_t for t in [k, upto].
std::vector<Vector> propagate_estimates_finite(const AggregatedDynamics& agg,
                                               const EnvFixedPoint& fp, int k,
                                               int upto, const Vector& Xhat) {
  const int T = agg.T();
  std::vector<Vector> X;
  X.push_back(Xhat);
  for (int t = k; t < upto; ++t) {
    const AggregatedStage& st = agg.at(t);
    Vector next = st.A * X.back() + st.HX + agg.noise.w_mean_at(t);
    for (int n = t; n < T; ++n)
      next += st.GX[static_cast<size_t>(n - t)] * fp.predict(k, n, Xhat);
    next += st.C * fp.predict(k, t, Xhat);
    X.push_back(std::move(next));
  }
  return X;
}

double finite_probe_residual(const AggregatedDynamics& agg,
                             const EnvFixedPoint& fp, int k, const Vector& Xhat) {
  const int T = agg.T();
  const auto X = propagate_estimates_finite(agg, fp, k, T - 1, Xhat);
  double worst = 0.0;
  for (int t = k; t < T; ++t) {
    const AggregatedStage& st = agg.at(t);
    Vector rhs = st.D * X[static_cast<size_t>(t - k)] + st.Hp +
                 agg.noise.xi_mean_at(t);
    for (int n = t; n < T; ++n)
      rhs += st.Gp[static_cast<size_t>(n - t)] * fp.predict(k, n, Xhat);
    const Vector lhs = fp.predict(k, t, Xhat);
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  return worst;
}

double gain_identity_residual(const Matrix& R, const Matrix& B, const Matrix& M,
                              const Matrix& A, const Matrix& F, double beta) {
  const Matrix res = R * F + beta * B.transpose() * M * (A + B * F);
  return res.size() == 0 ? 0.0 : res.cwiseAbs().maxCoeff();
}

}  // namespace

VerificationReport check_identities(const GameSpec& spec,
                                    const std::vector<FiniteGainSchedule>& gains,
                                    const AggregatedDynamics& agg,
                                    const EnvFixedPoint& fp, uint64_t seed,
                                    const Tolerances& tol) {
  VerificationReport report;
  const int T = spec.horizon.T;

  double worst_gain = 0.0;
  for (size_t i = 0; i < gains.size(); ++i) {
    const PlayerSpec& p = spec.players[i];
    for (int k = 0; k < T; ++k) {
      worst_gain = std::max(
          worst_gain,
          gain_identity_residual(p.R_at(k), p.B_at(k),
                                 gains[i].M[static_cast<size_t>(k) + 1],
                                 p.A_at(k), gains[i].F[static_cast<size_t>(k)],
                                 p.beta));
    }
  }
  report.add({"gain_identity", "R F_k + beta B'M_{k+1}(A + B F_k) = 0 at every stage",
              worst_gain < tol.gain_identity_tol, worst_gain,
              tol.gain_identity_tol, ""});

  // Nesting of prediction coefficients across information times: predicting
  // y_t from stage k directly equals predicting it from any intermediate
  // stage l with the propagated estimate.
  PathRng rng(seed, kPurposeNesting, 0);
  double worst_nest = 0.0;
  double worst_probe = 0.0;
  const int probes = 100;
  for (int probe = 0; probe < probes; ++probe) {
    const Vector Xhat = rng.normal_vector(agg.dims.x_dim);
    for (int k = 0; k < T; ++k) {
      worst_probe = std::max(worst_probe, finite_probe_residual(agg, fp, k, Xhat));
      const auto X = propagate_estimates_finite(agg, fp, k, T - 1, Xhat);
      for (int l = k; l < T; ++l) {
        const Vector& Xl = X[static_cast<size_t>(l - k)];
        for (int t = l; t < T; ++t) {
          const Vector direct = fp.predict(k, t, Xhat);
          const Vector refined = fp.predict(l, t, Xl);
          worst_nest = std::max(
              worst_nest, (direct - refined).cwiseAbs().maxCoeff());
        }
      }
    }
  }
  report.add({"nesting_identity",
              "a_{t,k-1} Xhat + b_{t,k-1} = a_{t,l-1} Xhat_{l|k-1} + b_{t,l-1}",
              worst_nest < tol.nesting_tol, worst_nest, tol.nesting_tol,
              std::to_string(probes) + " random probes, all (k,l) pairs"});
  report.add({"fixed_point_residual",
              "prediction stacks satisfy their defining linear systems",
              worst_probe < 1e-9, worst_probe, 1e-9, ""});

  double worst_cond = 0.0;
  double min_sigma = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < fp.cond.size(); ++k) {
    worst_cond = std::max(worst_cond, fp.cond[k]);
    min_sigma = std::min(min_sigma, fp.sigma_min[k]);
  }
  report.add({"uniqueness_certificate",
              "sigma_min(I - Lambda_k) > 0 and condition below the cap",
              min_sigma > 0.0 && worst_cond <= tol.fp_cond_cap, worst_cond,
              tol.fp_cond_cap, "sigma_min=" + std::to_string(min_sigma)});
  return report;
}

VerificationReport check_identities(const GameSpec& spec,
                                    const std::vector<StationaryGains>& gains,
                                    const AggregatedDynamics& agg,
                                    const EnvFixedPoint& fp, uint64_t seed,
                                    const Tolerances& tol) {
  VerificationReport report;

  double worst_gain = 0.0;
  double worst_are = 0.0;
  double worst_radius = 0.0;
  for (size_t i = 0; i < gains.size(); ++i) {
    const PlayerSpec& p = spec.players[i];
    worst_gain = std::max(worst_gain,
                          gain_identity_residual(p.R, p.B, gains[i].M, p.A,
                                                 gains[i].F, p.beta));
    worst_are = std::max(worst_are, gains[i].are_residual);
    worst_radius = std::max(worst_radius, gains[i].closed_loop_radius);
  }
  report.add({"gain_identity", "R F + beta B'M(A + B F) = 0",
              worst_gain < tol.gain_identity_tol, worst_gain,
              tol.gain_identity_tol, ""});
  report.add({"are_residual", "M solves the algebraic Riccati equation",
              worst_are < tol.are_residual, worst_are, tol.are_residual, ""});
  report.add({"closed_loop_radius", "rho(sqrt(beta)(A + BF)) < 1",
              worst_radius < 1.0, worst_radius, 1.0, ""});

  // Stationary nesting: predicting y_t from time 0 equals predicting it with
  // lag t-l from the estimate propagated to time l.
  const AggregatedStage& st = agg.at(0);
  const int lags = static_cast<int>(st.Gp.size());
  const int depth = std::min(6, std::max(1, static_cast<int>(fp.a_lag.size()) / 4));
  PathRng rng(seed, kPurposeNesting, 1);
  double worst_nest = 0.0;
  for (int probe = 0; probe < 100; ++probe) {
    const Vector X0 = rng.normal_vector(agg.dims.x_dim);
    std::vector<Vector> X;
    X.push_back(X0);
    for (int t = 0; t < depth; ++t) {
      Vector next = st.A * X.back() + st.HX + agg.noise.w_mean_at(0);
      for (int n = 0; n < lags; ++n)
        next += st.GX[static_cast<size_t>(n)] * fp.predict(0, t + n, X0);
      next += st.C * fp.predict(0, t, X0);
      X.push_back(std::move(next));
    }
    for (int l = 0; l <= depth; ++l) {
      for (int t = l; t <= depth; ++t) {
        const Vector direct = fp.predict(0, t, X0);
        const Vector refined = fp.predict(l, t, X[static_cast<size_t>(l)]);
        worst_nest = std::max(worst_nest, (direct - refined).cwiseAbs().maxCoeff());
      }
    }
  }
  report.add({"nesting_identity",
              "prediction coefficients consistent under estimate propagation",
              worst_nest < tol.nesting_tol, worst_nest, tol.nesting_tol, ""});

  report.add({"uniqueness_certificate",
              "truncated stationary system certified uniquely solvable",
              !fp.cond.empty() && fp.cond[0] <= tol.fp_cond_cap &&
                  fp.sigma_min[0] > 0.0,
              fp.cond.empty() ? 0.0 : fp.cond[0], tol.fp_cond_cap,
              "T_trunc=" + std::to_string(fp.T_trunc) +
                  ", last_delta=" + std::to_string(fp.last_delta)});

  // Empirical boundedness of the coefficient families.
  double max_norm = 0.0;
  for (size_t n = 0; n < fp.a_lag.size(); ++n)
    max_norm = std::max(max_norm, fp.a_lag[n].cwiseAbs().maxCoeff() +
                                      fp.b_lag[n].cwiseAbs().maxCoeff());
  report.add({"coefficient_boundedness",
              "sup_n (|a_n| + |b_n|) finite over computed lags",
              std::isfinite(max_norm), max_norm,
              std::numeric_limits<double>::infinity(), ""});
  return report;
}

namespace {

PlayerStrategy zero_like(const PlayerStrategy& s) {
  PlayerStrategy z = s;
  for (auto& F : z.F) F.setZero();
  for (auto& G : z.G) G.setZero();
  for (auto& H : z.H) H.setZero();
  return z;
}

}  // namespace

VerificationReport check_sebeu(const GameSpec& spec,
                               const StrategyProfile& profile,
                               const StrategyProfile& reference,
                               const ClosedLoopModel& model,
                               const SebeuCheckOptions& opts,
                               const Tolerances& tol) {
  VerificationReport report;
  const int N = spec.num_players();
  const int horizon = default_horizon(spec, tol);

  SimOptions sim;
  sim.paths = opts.paths;
  sim.seed = opts.seed;
  sim.horizon = horizon;
  sim.workers = opts.workers;

  for (int i = 0; i < N; ++i) {
    const PlayerStrategy& base = profile.players[static_cast<size_t>(i)];
    std::vector<PlayerStrategy> strategies;
    std::vector<std::string> names;
    strategies.push_back(base);
    names.push_back("base");

    const int nu = spec.players[static_cast<size_t>(i)].nu();
    const int nx = spec.players[static_cast<size_t>(i)].nx();
    const int xdim = model.dims.x_dim;
    int dir_idx = 0;
    for (double mag : opts.magnitudes) {
      for (int d = 0; d < opts.random_directions; ++d, ++dir_idx) {
        PathRng rng(opts.seed, kPurposeDeviationDirs,
                    static_cast<uint64_t>(i) * 100000 +
                        static_cast<uint64_t>(dir_idx));
        Matrix dF(nu, nx), dG(nu, xdim);
        Vector dH(nu);
        for (int r = 0; r < nu; ++r) {
          for (int c = 0; c < nx; ++c) dF(r, c) = rng.normal();
          for (int c = 0; c < xdim; ++c) dG(r, c) = rng.normal();
          dH(r) = rng.normal();
        }
        const double norm = std::sqrt(dF.squaredNorm() + dG.squaredNorm() +
                                      dH.squaredNorm());
        const double scale = norm > 0.0 ? mag / norm : 0.0;
        strategies.push_back(perturbed(base, scale * dF, scale * dG, scale * dH));
        std::ostringstream nm;
        nm << "random[" << mag << "," << d << "]";
        names.push_back(nm.str());
      }
    }
    strategies.push_back(zero_like(base));
    names.push_back("zero_strategy");
    strategies.push_back(reference.players[static_cast<size_t>(i)]);
    names.push_back("synthesized_optimum");

    const auto costs =
        simulate_subjective_costs(spec, i, strategies, model, sim, tol);

    double worst_z = std::numeric_limits<double>::infinity();
    std::string worst_name;
    double worst_gap = 0.0, worst_se = 0.0;
    for (size_t d = 1; d < strategies.size(); ++d) {
      const GapStat g = paired_gap(costs[d], costs[0]);
      const double z = safe_z(g.gap, g.se);
      if (z < worst_z) {
        worst_z = z;
        worst_name = names[d];
        worst_gap = g.gap;
        worst_se = g.se;
      }
    }
    std::ostringstream detail;
    detail << "worst deviation " << worst_name << ", gap=" << worst_gap
           << ", se=" << worst_se;
    report.add({"subjective_optimality.player" + std::to_string(i),
                "no deviation improves the subjective cost beyond noise "
                "(paired gap z >= -" + std::to_string(tol.gap_sigma) + ")",
                worst_z >= -tol.gap_sigma, worst_z, -tol.gap_sigma,
                detail.str()});
  }

  // Condition (ii): objective closed-loop y moments against the exogenous
  // model's analytic moments.
  int mh = opts.moment_horizon;
  if (!spec.horizon.infinite) mh = std::min(mh, spec.horizon.T);
  SimOptions obj_sim = sim;
  obj_sim.seed = opts.seed + 1;
  obj_sim.horizon = spec.horizon.infinite ? std::max(horizon, mh) : spec.horizon.T;
  const SimulationBatch batch = simulate_objective(spec, profile, obj_sim, tol);
  const MomentTrajectory analytic = moment_propagation(model, mh, tol);

  double worst_mean_z = 0.0;
  double worst_cov_z = 0.0;
  const int ny = model.dims.n_y;
  for (int t = 0; t < mh; ++t) {
    const Vector& emp = batch.y_stats.mean[static_cast<size_t>(t)];
    const Vector& se = batch.y_stats.stderr_mean[static_cast<size_t>(t)];
    const Vector& ana = analytic.y_mean[static_cast<size_t>(t)];
    for (int c = 0; c < ny; ++c) {
      const double z = std::abs(safe_z(emp(c) - ana(c), se(c)));
      worst_mean_z = std::max(worst_mean_z, z);
    }
    const Matrix& empc = batch.y_stats.cov[static_cast<size_t>(t)];
    const Matrix& anac = analytic.y_cov[static_cast<size_t>(t)];
    for (int r = 0; r < ny; ++r) {
      for (int c = r; c < ny; ++c) {
        // Gaussian sampling variance of a covariance entry.
        const double var_est =
            (anac(r, r) * anac(c, c) + anac(r, c) * anac(r, c)) / opts.paths;
        const double z = var_est > 0.0
                             ? std::abs(empc(r, c) - anac(r, c)) / std::sqrt(var_est)
                             : (empc(r, c) == anac(r, c) ? 0.0 : 1e300);
        worst_cov_z = std::max(worst_cov_z, z);
      }
    }
  }
  report.add({"consistency.mean",
              "objective environment means match the exogenous model",
              worst_mean_z < tol.moment_z, worst_mean_z, tol.moment_z,
              "stages 0.." + std::to_string(mh - 1)});
  report.add({"consistency.cov",
              "objective environment covariances match the exogenous model",
              worst_cov_z < tol.moment_z, worst_cov_z, tol.moment_z,
              "stages 0.." + std::to_string(mh - 1)});
  return report;
}

ExampleGains example_gains(const ExampleSpec& ex) {
  ExampleGains g;
  g.S1 = ex.R1 + ex.beta * ex.B1 * ex.Q2 * ex.B1;
  g.F1 = -ex.beta * ex.B1 * ex.Q2 * ex.A1 / g.S1;
  g.G11 = -(ex.K1 + ex.beta * ex.B1 * ex.Q2 * ex.C1) / g.S1;
  g.M1 = ex.Q1 + ex.beta * ex.A1 *
                     (ex.Q2 - ex.beta * ex.Q2 * ex.B1 * ex.B1 * ex.Q2 / g.S1) *
                     ex.A1;
  g.S0 = ex.R0 + ex.beta * ex.B0 * g.M1 * ex.B0;
  g.F0 = -ex.beta * ex.B0 * g.M1 * ex.A0 / g.S0;
  g.G00 = -(ex.K0 + ex.beta * ex.B0 * g.M1 * ex.C0) / g.S0;
  g.G01 = -ex.beta * ex.B0 *
          (ex.beta * (ex.A1 + ex.B1 * g.F1) * ex.Q2 * ex.C1 +
           (g.F1 * ex.K1 + ex.L1)) /
          g.S0;
  g.existence_pivot = 1.0 - ex.B0 * g.G01;
  g.exists = std::abs(g.existence_pivot) > 1e-12;

  const double cov_xbar = ex.var_x0 / ex.N;
  const double cbar = cov_xbar / (cov_xbar + ex.var_xi0);
  g.G1N = g.G11 * ((ex.A0 + ex.B0 * g.F0) * cbar + ex.C0);
  g.G1N_limit = g.G11 * ex.C0;
  return g;
}

ExampleBestResponse example_best_response(const ExampleSpec& ex) {
  const ExampleGains g = example_gains(ex);
  ExampleBestResponse br;
  const double N = ex.N;
  const double v_mi = (N - 1.0) / (N * N) * ex.var_x0;  // cov of others' average
  const double ctil = v_mi / (v_mi + ex.var_xi0);
  const double alpha = 1.0 / N;
  const double gamma = (ex.A0 + ex.B0 * g.F0) * ctil + (N - 1.0) / N * ex.C0;
  const double delta = -(ex.A0 + ex.B0 * g.F0) * ctil / N;
  const double P1 = ex.K1 + ex.beta * ex.B1 * ex.Q2 * ex.C1;

  br.F1 = -(ex.beta * ex.B1 * ex.Q2 * ex.A1 + P1 * alpha) / g.S1;
  br.G1 = -P1 * gamma / g.S1;
  br.F10 = -P1 * delta / g.S1;

  // Exact stage-0 response through the stage-1 value function
  // V1 = M1 x1^2 + 2 Ltil x1 m + Theta m^2 + const, m = E[y1 | I_1, y_0].
  const double Ltil = (ex.L1 + ex.K1 * g.F1) +
                      ex.beta * (ex.A1 + ex.B1 * g.F1) * ex.Q2 * ex.C1;
  const double Theta = ex.beta * ex.Q2 * ex.C1 * ex.C1 - P1 * P1 / g.S1;
  const double Xi = g.M1 + 2.0 * alpha * Ltil + alpha * alpha * Theta;
  const double den = ex.R0 + ex.beta * ex.B0 * ex.B0 * Xi;
  const double num =
      ex.K0 / N +
      ex.beta * ex.B0 *
          (g.M1 * (ex.A0 + ex.C0 / N) +
           Ltil * (2.0 * alpha * ex.A0 + (alpha * ex.C0 + gamma) / N + delta +
                   alpha * ex.C0 / N) +
           Theta * (alpha * alpha * ex.A0 + alpha * (alpha * ex.C0 + gamma) / N +
                    alpha * delta));
  br.F0 = -num / den;

  br.F0_limit = g.F0;
  br.F1_limit = g.F1;
  br.G1_limit = g.G11 * ex.C0;
  br.F10_limit = 0.0;
  return br;
}

NashGapEstimate example_nash_gap(const ExampleSpec& ex, int paths,
                                 uint64_t seed) {
  const ExampleGains g = example_gains(ex);
  const ExampleBestResponse br = example_best_response(ex);
  const int N = ex.N;
  const double sx0 = std::sqrt(ex.var_x0);
  const double sw0 = std::sqrt(ex.var_w0);
  const double sw1 = std::sqrt(ex.var_w1);
  const double sxi0 = std::sqrt(ex.var_xi0);
  const double sxi1 = std::sqrt(ex.var_xi1);

  auto c0 = [&](double x, double u, double y) {
    return ex.Q0 * x * x + ex.R0 * u * u + 2.0 * y * (ex.K0 * u + ex.L0 * x);
  };
  auto c1 = [&](double x, double u, double y) {
    return ex.Q1 * x * x + ex.R1 * u * u + 2.0 * y * (ex.K1 * u + ex.L1 * x);
  };

  std::vector<double> x0(static_cast<size_t>(N)), w0(static_cast<size_t>(N)),
      x1s(static_cast<size_t>(N)), x1b(static_cast<size_t>(N));
  double gap_sum = 0.0, gap_sq = 0.0;
  for (int path = 0; path < paths; ++path) {
    PathRng rng(seed, kPurposeExample, static_cast<uint64_t>(path));
    for (int j = 0; j < N; ++j) x0[static_cast<size_t>(j)] = sx0 * rng.normal();
    for (int j = 0; j < N; ++j) w0[static_cast<size_t>(j)] = sw0 * rng.normal();
    const double xi0 = sxi0 * rng.normal();
    const double xi1 = sxi1 * rng.normal();
    const double w1 = sw1 * rng.normal();

    double xbar0 = 0.0;
    for (int j = 0; j < N; ++j) xbar0 += x0[static_cast<size_t>(j)];
    xbar0 /= N;
    const double y0 = xbar0 + xi0;

    // Equilibrium play for everyone; the focal player (index 0) deviates to
    // the exact best response in the second run.
    double xbar1s = 0.0, xbar1b = 0.0;
    for (int j = 0; j < N; ++j) {
      const double u0 = g.F0 * x0[static_cast<size_t>(j)];
      x1s[static_cast<size_t>(j)] =
          ex.A0 * x0[static_cast<size_t>(j)] + ex.B0 * u0 + ex.C0 * y0 +
          w0[static_cast<size_t>(j)];
      const double u0d = (j == 0) ? br.F0 * x0[0] : u0;
      x1b[static_cast<size_t>(j)] =
          ex.A0 * x0[static_cast<size_t>(j)] + ex.B0 * u0d + ex.C0 * y0 +
          w0[static_cast<size_t>(j)];
      xbar1s += x1s[static_cast<size_t>(j)];
      xbar1b += x1b[static_cast<size_t>(j)];
    }
    xbar1s /= N;
    xbar1b /= N;
    const double y1s = xbar1s + xi1;
    const double y1b = xbar1b + xi1;

    const double u0s = g.F0 * x0[0];
    const double u0b = br.F0 * x0[0];
    const double u1s = g.F1 * x1s[0] + g.G1N * y0;
    const double u1b = br.F1 * x1b[0] + br.G1 * y0 + br.F10 * x0[0];
    const double x2s = ex.A1 * x1s[0] + ex.B1 * u1s + ex.C1 * y1s + w1;
    const double x2b = ex.A1 * x1b[0] + ex.B1 * u1b + ex.C1 * y1b + w1;

    const double Js = c0(x0[0], u0s, y0) + ex.beta * c1(x1s[0], u1s, y1s) +
                      ex.beta * ex.beta * ex.Q2 * x2s * x2s;
    const double Jb = c0(x0[0], u0b, y0) + ex.beta * c1(x1b[0], u1b, y1b) +
                      ex.beta * ex.beta * ex.Q2 * x2b * x2b;
    const double gap = Js - Jb;
    gap_sum += gap;
    gap_sq += gap * gap;
  }
  NashGapEstimate est;
  est.gap = gap_sum / paths;
  const double var = (gap_sq - gap_sum * gap_sum / paths) / (paths - 1);
  est.se = std::sqrt(std::max(0.0, var) / paths);
  return est;
}

VerificationReport check_meanfield_nash(const GameSpec& spec,
                                        const StrategyProfile& profile,
                                        const StationaryGains& gains,
                                        const MeanFieldPoint& mf,
                                        const MeanFieldCheckOptions& opts,
                                        const Tolerances& tol) {
  VerificationReport report;
  const PlayerSpec& p = spec.players[0];
  const Matrix& E1 = spec.environment.E1[0];
  const Matrix& E2 = spec.environment.E2[0];
  Matrix G_total = Matrix::Zero(p.nu(), spec.environment.ny());
  for (const auto& Gn : gains.G) G_total += Gn;

  // Direct substitution into the stationary mean equations.
  const DimensionTable dims = stack_dimensions(spec);
  const Vector w_mean = spec.noise.w_mean.segment(dims.x_offset[0], p.nx());
  const Vector r1 = mf.y0 - ((E1 * gains.F + E2) * mf.x0 + E1 * G_total * mf.y0 +
                             E1 * gains.H + spec.noise.xi_mean);
  const Vector r2 = mf.x0 - (p.A * mf.x0 +
                             p.B * (gains.F * mf.x0 + G_total * mf.y0 + gains.H) +
                             w_mean);
  const double residual =
      std::max(r1.cwiseAbs().maxCoeff(), r2.cwiseAbs().maxCoeff());
  report.add({"meanfield_residual",
              "stationary means satisfy both mean equations",
              residual < tol.meanfield_residual, residual,
              tol.meanfield_residual, ""});

  // Population average tracks the analytic representative mean within
  // Monte Carlo bands.
  SimOptions sim;
  sim.paths = opts.paths;
  sim.seed = opts.seed;
  sim.horizon = opts.horizon;
  sim.workers = opts.workers;
  const SimulationBatch batch = simulate_meanfield(
      spec, profile, opts.consistency_population, sim, nullptr, tol);
  Vector m = spec.noise.x0_mean.segment(dims.x_offset[0], p.nx());
  const Vector drive = p.B * (G_total * mf.y0 + gains.H) + w_mean;
  double worst_avg_z = 0.0;
  for (int t = 0; t < opts.horizon; ++t) {
    const Vector& emp = batch.X_stats.mean[static_cast<size_t>(t)];
    const Vector& se = batch.X_stats.stderr_mean[static_cast<size_t>(t)];
    for (int c = 0; c < p.nx(); ++c)
      worst_avg_z =
          std::max(worst_avg_z, std::abs(safe_z(emp(c) - m(c), se(c))));
    m = (p.A + p.B * gains.F) * m + drive;
  }
  report.add({"population_average",
              "empirical population average matches the representative mean",
              worst_avg_z < tol.moment_z, worst_avg_z, tol.moment_z,
              "population " + std::to_string(opts.consistency_population)});

  // Per-agent cost symmetry under identical strategies.
  if (batch.cost.size() >= 2) {
    const double dz = safe_z(
        batch.cost_mean[0] - batch.cost_mean[1],
        std::sqrt(batch.cost_stderr[0] * batch.cost_stderr[0] +
                  batch.cost_stderr[1] * batch.cost_stderr[1]));
    report.add({"cost_symmetry",
                "identical agents incur statistically identical costs",
                std::abs(dz) < tol.moment_z, std::abs(dz), tol.moment_z, ""});
  }

  // A unilateral deviation perturbs the environment like 1/population.
  std::vector<double> pops, effects;
  const PlayerStrategy zero_dev = [&]() {
    PlayerStrategy z = profile.players[0];
    for (auto& F : z.F) F.setZero();
    for (auto& G : z.G) G.setZero();
    for (auto& H : z.H) H.setZero();
    return z;
  }();
  for (int pop : opts.populations) {
    SimOptions dsim = sim;
    dsim.store_trajectories = true;
    dsim.paths = std::min(opts.paths, 32);
    const SimulationBatch base =
        simulate_meanfield(spec, profile, pop, dsim, nullptr, tol);
    const SimulationBatch dev =
        simulate_meanfield(spec, profile, pop, dsim, &zero_dev, tol);
    double effect = 0.0;
    for (int path = 0; path < dsim.paths; ++path) {
      const Matrix& yb = base.trajectories->y[static_cast<size_t>(path)];
      const Matrix& yd = dev.trajectories->y[static_cast<size_t>(path)];
      effect = std::max(effect, (yb - yd).cwiseAbs().maxCoeff());
    }
    pops.push_back(static_cast<double>(pop));
    effects.push_back(effect);
  }
  const double slope = fit_loglog_slope(pops, effects);
  report.add({"deviation_effect_slope",
              "sup-norm effect of one deviator on y scales like 1/population",
              std::abs(slope + 1.0) < 0.15, slope, -1.0,
              "populations " + std::to_string(opts.populations.front()) + ".." +
                  std::to_string(opts.populations.back())});
  return report;
}

double fit_loglog_slope(const std::vector<double>& x,
                        const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error("fit_loglog_slope: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace sebeu
