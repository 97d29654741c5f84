#include "sebeu/artifacts.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace sebeu {

namespace {

using json = ordered_json;

json lag_map(const std::vector<Matrix>& mats) {
  json m = json::object();
  for (size_t n = 0; n < mats.size(); ++n)
    m[std::to_string(n)] = matrix_to_json(mats[n]);
  return m;
}

std::vector<Matrix> lag_map_read(const json& j, const std::string& field) {
  std::vector<Matrix> out(j.size());
  for (auto it = j.begin(); it != j.end(); ++it) {
    const size_t n = static_cast<size_t>(std::stoul(it.key()));
    if (n >= out.size()) throw InputError(field + ": non-contiguous lag keys");
    out[n] = matrix_from_json(it.value(), field + "." + it.key());
  }
  return out;
}

std::string csv_num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

ordered_json gains_to_json(const std::vector<FiniteGainSchedule>& gains) {
  json j;
  j["horizon"] = "finite";
  json players = json::array();
  for (const auto& g : gains) {
    json pj;
    pj["beta"] = g.beta;
    json stages = json::array();
    for (int k = 0; k < g.T(); ++k) {
      json st;
      st["F"] = matrix_to_json(g.F[static_cast<size_t>(k)]);
      st["G"] = lag_map(g.G[static_cast<size_t>(k)]);
      st["H"] = vector_to_json(g.H[static_cast<size_t>(k)]);
      st["M"] = matrix_to_json(g.M[static_cast<size_t>(k)]);
      stages.push_back(std::move(st));
    }
    pj["stages"] = std::move(stages);
    pj["M_terminal"] = matrix_to_json(g.M.back());
    players.push_back(std::move(pj));
  }
  j["players"] = std::move(players);
  return j;
}

ordered_json gains_to_json(const std::vector<StationaryGains>& gains) {
  json j;
  j["horizon"] = "infinite";
  json players = json::array();
  for (const auto& g : gains) {
    json pj;
    pj["beta"] = g.beta;
    pj["F"] = matrix_to_json(g.F);
    pj["G"] = lag_map(g.G);
    pj["H"] = vector_to_json(g.H);
    pj["M"] = matrix_to_json(g.M);
    pj["S"] = matrix_to_json(g.S);
    pj["closed_loop_radius"] = g.closed_loop_radius;
    pj["are_residual"] = g.are_residual;
    pj["iterations"] = g.iterations;
    players.push_back(std::move(pj));
  }
  j["players"] = std::move(players);
  return j;
}

GainsArtifact gains_from_json(const ordered_json& j) {
  GainsArtifact art;
  const std::string mode = j.at("horizon").get<std::string>();
  art.infinite = mode == "infinite";
  for (const auto& pj : j.at("players")) {
    if (art.infinite) {
      StationaryGains g;
      g.beta = pj.at("beta").get<double>();
      g.F = matrix_from_json(pj.at("F"), "gains.F");
      g.G = lag_map_read(pj.at("G"), "gains.G");
      g.H = vector_from_json(pj.at("H"), "gains.H");
      g.M = matrix_from_json(pj.at("M"), "gains.M");
      g.S = matrix_from_json(pj.at("S"), "gains.S");
      g.closed_loop_radius = pj.at("closed_loop_radius").get<double>();
      g.are_residual = pj.at("are_residual").get<double>();
      g.iterations = pj.at("iterations").get<int>();
      art.stationary.push_back(std::move(g));
    } else {
      FiniteGainSchedule g;
      g.beta = pj.at("beta").get<double>();
      for (const auto& st : pj.at("stages")) {
        g.F.push_back(matrix_from_json(st.at("F"), "gains.F"));
        g.G.push_back(lag_map_read(st.at("G"), "gains.G"));
        g.H.push_back(vector_from_json(st.at("H"), "gains.H"));
        g.M.push_back(matrix_from_json(st.at("M"), "gains.M"));
      }
      g.M.push_back(matrix_from_json(pj.at("M_terminal"), "gains.M_terminal"));
      art.finite.push_back(std::move(g));
    }
  }
  return art;
}

ordered_json fixed_point_to_json(const EnvFixedPoint& fp) {
  json j;
  if (fp.infinite) {
    j["horizon"] = "infinite";
    json a = json::array(), b = json::array();
    for (const auto& m : fp.a_lag) a.push_back(matrix_to_json(m));
    for (const auto& v : fp.b_lag) b.push_back(vector_to_json(v));
    j["a"] = std::move(a);
    j["b"] = std::move(b);
    j["y_inf"] = vector_to_json(fp.y_inf);
    j["X_inf"] = vector_to_json(fp.X_inf);
    json diag;
    diag["sigma_min"] = fp.sigma_min.empty() ? 0.0 : fp.sigma_min[0];
    diag["cond"] = fp.cond.empty() ? 0.0 : fp.cond[0];
    diag["T_trunc"] = fp.T_trunc;
    diag["doublings"] = fp.doublings;
    diag["last_delta"] = fp.last_delta;
    j["diagnostics"] = std::move(diag);
  } else {
    j["horizon"] = "finite";
    const int T = static_cast<int>(fp.a.size());
    // a[t][k]: outer index target stage t, inner index information stage k.
    json a = json::array(), b = json::array();
    for (int t = 0; t < T; ++t) {
      json at = json::array(), bt = json::array();
      for (int k = 0; k <= t; ++k) {
        at.push_back(matrix_to_json(
            fp.a[static_cast<size_t>(k)][static_cast<size_t>(t - k)]));
        bt.push_back(vector_to_json(
            fp.b[static_cast<size_t>(k)][static_cast<size_t>(t - k)]));
      }
      a.push_back(std::move(at));
      b.push_back(std::move(bt));
    }
    j["a"] = std::move(a);
    j["b"] = std::move(b);
    json diag;
    diag["sigma_min"] = fp.sigma_min;
    diag["cond"] = fp.cond;
    j["diagnostics"] = std::move(diag);
  }
  return j;
}

EnvFixedPoint fixed_point_from_json(const ordered_json& j) {
  EnvFixedPoint fp;
  fp.infinite = j.at("horizon").get<std::string>() == "infinite";
  if (fp.infinite) {
    for (const auto& m : j.at("a"))
      fp.a_lag.push_back(matrix_from_json(m, "fixed_point.a"));
    for (const auto& v : j.at("b"))
      fp.b_lag.push_back(vector_from_json(v, "fixed_point.b"));
    fp.y_inf = vector_from_json(j.at("y_inf"), "fixed_point.y_inf");
    fp.X_inf = vector_from_json(j.at("X_inf"), "fixed_point.X_inf");
    const auto& diag = j.at("diagnostics");
    fp.sigma_min.push_back(diag.at("sigma_min").get<double>());
    fp.cond.push_back(diag.at("cond").get<double>());
    fp.T_trunc = diag.at("T_trunc").get<int>();
    fp.doublings = diag.at("doublings").get<int>();
    fp.last_delta = diag.at("last_delta").get<double>();
  } else {
    const auto& a = j.at("a");
    const auto& b = j.at("b");
    const int T = static_cast<int>(a.size());
    fp.a.resize(static_cast<size_t>(T));
    fp.b.resize(static_cast<size_t>(T));
    for (int k = 0; k < T; ++k) {
      fp.a[static_cast<size_t>(k)].resize(static_cast<size_t>(T - k));
      fp.b[static_cast<size_t>(k)].resize(static_cast<size_t>(T - k));
    }
    for (int t = 0; t < T; ++t) {
      for (int k = 0; k <= t; ++k) {
        fp.a[static_cast<size_t>(k)][static_cast<size_t>(t - k)] =
            matrix_from_json(a[static_cast<size_t>(t)][static_cast<size_t>(k)],
                             "fixed_point.a");
        fp.b[static_cast<size_t>(k)][static_cast<size_t>(t - k)] =
            vector_from_json(b[static_cast<size_t>(t)][static_cast<size_t>(k)],
                             "fixed_point.b");
      }
    }
    const auto& diag = j.at("diagnostics");
    fp.sigma_min = diag.at("sigma_min").get<std::vector<double>>();
    fp.cond = diag.at("cond").get<std::vector<double>>();
  }
  return fp;
}

ordered_json model_to_json(const ClosedLoopModel& model) {
  json j;
  j["horizon"] = model.infinite ? "infinite" : "finite";
  json dims;
  dims["n_y"] = model.dims.n_y;
  dims["env_dim"] = model.dims.env_dim;
  dims["player_x"] = model.dims.player_x;
  dims["player_u"] = model.dims.player_u;
  j["dims"] = std::move(dims);
  j["x0_mean"] = vector_to_json(model.x0_mean);
  j["x0_cov"] = matrix_to_json(model.x0_cov);
  json stages = json::array();
  for (const auto& st : model.stages) {
    json sj;
    sj["A"] = matrix_to_json(st.A);
    sj["C"] = matrix_to_json(st.C);
    sj["D"] = matrix_to_json(st.D);
    sj["Gp"] = matrix_to_json(st.Gp);
    sj["GX"] = matrix_to_json(st.GX);
    sj["Hp"] = vector_to_json(st.Hp);
    sj["HX"] = vector_to_json(st.HX);
    sj["xi_mean"] = vector_to_json(st.xi_mean);
    sj["xi_cov"] = matrix_to_json(st.xi_cov);
    sj["W_mean"] = vector_to_json(st.W_mean);
    sj["W_cov"] = matrix_to_json(st.W_cov);
    stages.push_back(std::move(sj));
  }
  j["stages"] = std::move(stages);
  return j;
}

ClosedLoopModel model_from_json(const ordered_json& j) {
  ClosedLoopModel model;
  model.infinite = j.at("horizon").get<std::string>() == "infinite";
  const auto& dims = j.at("dims");
  model.dims.n_y = dims.at("n_y").get<int>();
  model.dims.env_dim = dims.at("env_dim").get<int>();
  model.dims.player_x = dims.at("player_x").get<std::vector<int>>();
  model.dims.player_u = dims.at("player_u").get<std::vector<int>>();
  int xo = model.dims.env_dim;
  int uo = 0;
  for (size_t i = 0; i < model.dims.player_x.size(); ++i) {
    model.dims.x_offset.push_back(xo);
    model.dims.u_offset.push_back(uo);
    xo += model.dims.player_x[i];
    uo += model.dims.player_u[i];
  }
  model.dims.x_dim = xo;
  model.dims.u_dim = uo;
  model.x0_mean = vector_from_json(j.at("x0_mean"), "model.x0_mean");
  model.x0_cov = matrix_from_json(j.at("x0_cov"), "model.x0_cov");
  for (const auto& sj : j.at("stages")) {
    ClosedLoopStage st;
    st.A = matrix_from_json(sj.at("A"), "model.A");
    st.C = matrix_from_json(sj.at("C"), "model.C");
    st.D = matrix_from_json(sj.at("D"), "model.D");
    st.Gp = matrix_from_json(sj.at("Gp"), "model.Gp");
    st.GX = matrix_from_json(sj.at("GX"), "model.GX");
    st.Hp = vector_from_json(sj.at("Hp"), "model.Hp");
    st.HX = vector_from_json(sj.at("HX"), "model.HX");
    st.xi_mean = vector_from_json(sj.at("xi_mean"), "model.xi_mean");
    st.xi_cov = matrix_from_json(sj.at("xi_cov"), "model.xi_cov");
    st.W_mean = vector_from_json(sj.at("W_mean"), "model.W_mean");
    st.W_cov = matrix_from_json(sj.at("W_cov"), "model.W_cov");
    model.stages.push_back(std::move(st));
  }
  return model;
}

ordered_json meanfield_to_json(const MeanFieldPoint& mf) {
  json j;
  j["y0"] = vector_to_json(mf.y0);
  j["x0"] = vector_to_json(mf.x0);
  j["residual"] = mf.residual;
  j["cond"] = mf.cond;
  return j;
}

MeanFieldPoint meanfield_from_json(const ordered_json& j) {
  MeanFieldPoint mf;
  mf.y0 = vector_from_json(j.at("y0"), "meanfield.y0");
  mf.x0 = vector_from_json(j.at("x0"), "meanfield.x0");
  mf.residual = j.at("residual").get<double>();
  mf.cond = j.at("cond").get<double>();
  return mf;
}

ordered_json tolerances_to_json(const Tolerances& t) {
  json j;
  j["pd"] = t.pd_tol;
  j["psd"] = t.psd_tol;
  j["s_cond_cap"] = t.s_cond_cap;
  j["are_delta"] = t.are_delta;
  j["are_max_iter"] = t.are_max_iter;
  j["are_residual"] = t.are_residual;
  j["g_tail_rel"] = t.g_tail_rel;
  j["fp_cond_cap"] = t.fp_cond_cap;
  j["fp_delta"] = t.fp_delta;
  j["fp_initial_trunc"] = t.fp_initial_trunc;
  j["fp_max_doublings"] = t.fp_max_doublings;
  j["innovation_cond_cap"] = t.innovation_cond_cap;
  j["ss_delta"] = t.ss_delta;
  j["ss_residual"] = t.ss_residual;
  j["overflow_cap"] = t.overflow_cap;
  j["cost_tail"] = t.cost_tail;
  j["gain_identity"] = t.gain_identity_tol;
  j["nesting"] = t.nesting_tol;
  j["meanfield_residual"] = t.meanfield_residual;
  j["gap_sigma"] = t.gap_sigma;
  j["moment_z"] = t.moment_z;
  j["control_sigma"] = t.control_sigma;
  return j;
}

std::vector<std::string> dimension_labels(const DimensionTable& dims) {
  std::vector<std::string> labels;
  for (int i = 0; i < dims.env_dim; ++i)
    labels.push_back("env.x[" + std::to_string(i) + "]");
  for (int p = 0; p < dims.num_players(); ++p)
    for (int i = 0; i < dims.player_x[static_cast<size_t>(p)]; ++i)
      labels.push_back("p" + std::to_string(p) + ".x[" + std::to_string(i) + "]");
  return labels;
}

std::string batch_summary_csv(const SimulationBatch& batch,
                              const DimensionTable& dims) {
  std::ostringstream os;
  os << "t,var,mean,stderr\n";
  const auto labels = dimension_labels(dims);
  for (size_t t = 0; t < batch.y_stats.mean.size(); ++t) {
    const Vector& m = batch.y_stats.mean[t];
    const Vector& se = batch.y_stats.stderr_mean[t];
    for (Eigen::Index c = 0; c < m.size(); ++c) {
      os << t << ",y[" << c << "]," << csv_num(m(c)) << ","
         << csv_num(se.size() > c ? se(c) : 0.0) << "\n";
    }
  }
  for (size_t t = 0; t < batch.X_stats.mean.size(); ++t) {
    const Vector& m = batch.X_stats.mean[t];
    for (Eigen::Index c = 0; c < m.size(); ++c) {
      const std::string label =
          c < static_cast<Eigen::Index>(labels.size())
              ? labels[static_cast<size_t>(c)]
              : "x[" + std::to_string(c) + "]";
      const double se =
          batch.X_stats.stderr_mean[t].size() > c
              ? batch.X_stats.stderr_mean[t](c)
              : 0.0;
      os << t << "," << label << "," << csv_num(m(c)) << "," << csv_num(se)
         << "\n";
    }
  }
  return os.str();
}

std::string costs_csv(const SimulationBatch& batch) {
  std::ostringstream os;
  os << "player,cost_mean,cost_stderr,tail_bound\n";
  for (size_t i = 0; i < batch.cost_mean.size(); ++i) {
    const double tail =
        i < batch.cost_tail_bound.size() ? batch.cost_tail_bound[i] : 0.0;
    os << i << "," << csv_num(batch.cost_mean[i]) << ","
       << csv_num(batch.cost_stderr[i]) << "," << csv_num(tail) << "\n";
  }
  return os.str();
}

std::string moments_csv(const MomentTrajectory& traj, const DimensionTable& dims) {
  std::ostringstream os;
  const auto labels = dimension_labels(dims);
  os << "t";
  for (const auto& l : labels) os << ",mean:" << l;
  for (int c = 0; c < dims.n_y; ++c) os << ",mean:y[" << c << "]";
  for (int r = 0; r < dims.x_dim; ++r)
    for (int c = 0; c < dims.x_dim; ++c)
      os << ",cov:" << labels[static_cast<size_t>(r)] << "*"
         << labels[static_cast<size_t>(c)];
  for (int r = 0; r < dims.n_y; ++r)
    for (int c = 0; c < dims.n_y; ++c)
      os << ",cov:y[" << r << "]*y[" << c << "]";
  os << "\n";
  const size_t stages = traj.y_mean.size();
  for (size_t t = 0; t < stages; ++t) {
    os << t;
    for (Eigen::Index c = 0; c < traj.X_mean[t].size(); ++c)
      os << "," << csv_num(traj.X_mean[t](c));
    for (Eigen::Index c = 0; c < traj.y_mean[t].size(); ++c)
      os << "," << csv_num(traj.y_mean[t](c));
    for (Eigen::Index r = 0; r < traj.X_cov[t].rows(); ++r)
      for (Eigen::Index c = 0; c < traj.X_cov[t].cols(); ++c)
        os << "," << csv_num(traj.X_cov[t](r, c));
    for (Eigen::Index r = 0; r < traj.y_cov[t].rows(); ++r)
      for (Eigen::Index c = 0; c < traj.y_cov[t].cols(); ++c)
        os << "," << csv_num(traj.y_cov[t](r, c));
    os << "\n";
  }
  return os.str();
}

void write_trajectory_dump(const std::filesystem::path& path,
                           const SimulationBatch& batch,
                           const DimensionTable& dims) {
  if (!batch.trajectories)
    throw Error("trajectory dump requested but trajectories were not stored");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  const char magic[4] = {'S', 'E', 'B', 'T'};
  out.write(magic, 4);
  auto write_u32 = [&](uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
  };
  write_u32(1);
  write_u32(static_cast<uint32_t>(dims.x_dim));
  write_u32(static_cast<uint32_t>(dims.n_y));
  write_u32(static_cast<uint32_t>(dims.u_dim));
  write_u32(static_cast<uint32_t>(batch.horizon));
  const uint64_t paths = static_cast<uint64_t>(batch.paths);
  out.write(reinterpret_cast<const char*>(&paths), 8);
  auto write_rowmajor = [&](const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double v = m(r, c);
        out.write(reinterpret_cast<const char*>(&v), 8);
      }
  };
  for (int p = 0; p < batch.paths; ++p) {
    write_rowmajor(batch.trajectories->X[static_cast<size_t>(p)]);
    write_rowmajor(batch.trajectories->y[static_cast<size_t>(p)]);
    write_rowmajor(batch.trajectories->u[static_cast<size_t>(p)]);
  }
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << content;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ordered_json read_json(const std::filesystem::path& path) {
  try {
    return ordered_json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const ordered_json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace sebeu
