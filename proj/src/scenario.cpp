#include "sebeu/scenario.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace sebeu {

namespace {

using json = ordered_json;

[[noreturn]] void bad(const std::string& field, const std::string& message) {
  throw InputError("scenario: " + field + ": " + message);
}

void expect_keys(const json& j, const std::set<std::string>& allowed,
                 const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) bad(where, "unknown key '" + it.key() + "'");
  }
}

const json& require(const json& j, const std::string& key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) bad(where, "missing key '" + key + "'");
  return *it;
}

}  // namespace

Matrix matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_object()) bad(field, "expected a matrix object {rows, cols, data}");
  expect_keys(j, {"rows", "cols", "data"}, field);
  const int rows = require(j, "rows", field).get<int>();
  const int cols = require(j, "cols", field).get<int>();
  const auto& data = require(j, "data", field);
  if (rows < 0 || cols < 0) bad(field, "negative dimensions");
  if (!data.is_array() || static_cast<int>(data.size()) != rows * cols)
    bad(field, "data length must equal rows*cols");
  Matrix m(rows, cols);
  int idx = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = data[static_cast<size_t>(idx++)].get<double>();
  return m;
}

json matrix_to_json(const Matrix& m) {
  json j;
  j["rows"] = static_cast<int>(m.rows());
  j["cols"] = static_cast<int>(m.cols());
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = std::move(data);
  return j;
}

Vector vector_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) bad(field, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

json vector_to_json(const Vector& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

namespace {

bool is_staged_matrix(const json& j) { return j.is_array(); }

// A matrix field is either one object or an array of per-stage objects.
void read_matrix_field(const json& parent, const std::string& key,
                       const std::string& where, Matrix& base,
                       std::vector<Matrix>* staged, bool required = true) {
  auto it = parent.find(key);
  if (it == parent.end()) {
    if (required) bad(where, "missing key '" + key + "'");
    return;
  }
  const std::string field = where + "." + key;
  if (is_staged_matrix(*it)) {
    if (staged == nullptr) bad(field, "per-stage list not allowed here");
    staged->clear();
    for (size_t t = 0; t < it->size(); ++t)
      staged->push_back(matrix_from_json((*it)[t], field + "[" + std::to_string(t) + "]"));
    if (staged->empty()) bad(field, "per-stage list is empty");
    base = staged->front();
  } else {
    base = matrix_from_json(*it, field);
  }
}

void read_vector_field(const json& parent, const std::string& key,
                       const std::string& where, Vector& base,
                       std::vector<Vector>* staged) {
  const json& j = require(parent, key, where);
  const std::string field = where + "." + key;
  if (!j.is_array()) bad(field, "expected an array");
  const bool nested = !j.empty() && j[0].is_array();
  if (nested) {
    if (staged == nullptr) bad(field, "per-stage list not allowed here");
    staged->clear();
    for (size_t t = 0; t < j.size(); ++t)
      staged->push_back(vector_from_json(j[t], field + "[" + std::to_string(t) + "]"));
    base = staged->front();
  } else {
    base = vector_from_json(j, field);
  }
}

PlayerSpec player_from_json(const json& j, int index, bool finite) {
  const std::string where = "players[" + std::to_string(index) + "]";
  expect_keys(j, {"A", "B", "C", "Q_stage", "R", "K", "L", "Q_terminal", "beta"},
              where);
  PlayerSpec p;
  std::vector<Matrix> sA, sB, sC, sQ, sR, sK, sL;
  read_matrix_field(j, "A", where, p.A, &sA);
  read_matrix_field(j, "B", where, p.B, &sB);
  read_matrix_field(j, "C", where, p.C, &sC);
  read_matrix_field(j, "Q_stage", where, p.Q_stage, &sQ);
  read_matrix_field(j, "R", where, p.R, &sR);
  read_matrix_field(j, "K", where, p.K, &sK);
  read_matrix_field(j, "L", where, p.L, &sL);
  if (finite)
    read_matrix_field(j, "Q_terminal", where, p.Q_terminal, nullptr);
  else if (j.contains("Q_terminal"))
    read_matrix_field(j, "Q_terminal", where, p.Q_terminal, nullptr);
  p.beta = require(j, "beta", where).get<double>();

  const size_t T = std::max({sA.size(), sB.size(), sC.size(), sQ.size(),
                             sR.size(), sK.size(), sL.size()});
  for (const auto* s : {&sA, &sB, &sC, &sQ, &sR, &sK, &sL}) {
    if (!s->empty() && s->size() != T)
      bad(where, "per-stage matrix lists must all have the same length");
  }
  if (T > 0) {
    auto pick_m = [&](const std::vector<Matrix>& s, const Matrix& b, size_t t) {
      return s.empty() ? b : s[t];
    };
    for (size_t t = 0; t < T; ++t) {
      PlayerStage st;
      st.A = pick_m(sA, p.A, t);
      st.B = pick_m(sB, p.B, t);
      st.C = pick_m(sC, p.C, t);
      st.Q = pick_m(sQ, p.Q_stage, t);
      st.R = pick_m(sR, p.R, t);
      st.K = pick_m(sK, p.K, t);
      st.L = pick_m(sL, p.L, t);
      p.stages.push_back(std::move(st));
    }
  }
  return p;
}

std::vector<Matrix> matrix_list_from_json(const json& j, const std::string& field,
                                          size_t expected) {
  if (!j.is_array()) bad(field, "expected an array of matrices, one per player");
  if (j.size() != expected) bad(field, "one entry per player required");
  std::vector<Matrix> out;
  for (size_t i = 0; i < j.size(); ++i)
    out.push_back(matrix_from_json(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

EnvironmentSpec environment_from_json(const json& j, size_t n_players) {
  const std::string where = "environment";
  expect_keys(j, {"A0", "D", "B1", "B2", "E1", "E2"}, where);
  EnvironmentSpec env;
  // A0/D may be omitted for mean-field scenarios (no environment state).
  if (j.contains("A0"))
    env.A0 = matrix_from_json(j["A0"], where + ".A0");
  else
    env.A0 = Matrix::Zero(0, 0);
  env.D = matrix_from_json(require(j, "D", where), where + ".D");
  auto list_or_zero = [&](const char* key, int rows_hint) -> std::vector<Matrix> {
    if (j.contains(key)) return matrix_list_from_json(j[key], where + "." + key, n_players);
    (void)rows_hint;
    return {};
  };
  env.B1 = list_or_zero("B1", env.nx0());
  env.B2 = list_or_zero("B2", env.nx0());
  env.E1 = list_or_zero("E1", env.ny());
  env.E2 = list_or_zero("E2", env.ny());
  return env;
}

NoiseSpec noise_from_json(const json& j) {
  const std::string where = "noise";
  expect_keys(j, {"family", "x0_mean", "x0_cov", "w_mean", "w_cov", "xi_mean",
                  "xi_cov"},
              where);
  NoiseSpec noise;
  if (j.contains("family")) {
    const std::string fam = j["family"].get<std::string>();
    if (fam == "gaussian")
      noise.family = NoiseFamily::gaussian;
    else if (fam == "moments_only")
      noise.family = NoiseFamily::moments_only;
    else
      bad(where + ".family", "expected 'gaussian' or 'moments_only'");
  }
  read_vector_field(j, "x0_mean", where, noise.x0_mean, nullptr);
  read_matrix_field(j, "x0_cov", where, noise.x0_cov, nullptr);
  read_vector_field(j, "w_mean", where, noise.w_mean, &noise.w_mean_stages);
  read_matrix_field(j, "w_cov", where, noise.w_cov, &noise.w_cov_stages);
  read_vector_field(j, "xi_mean", where, noise.xi_mean, &noise.xi_mean_stages);
  read_matrix_field(j, "xi_cov", where, noise.xi_cov, &noise.xi_cov_stages);
  if (noise.w_mean_stages.size() == 1) noise.w_mean_stages.clear();
  if (noise.w_cov_stages.size() == 1) noise.w_cov_stages.clear();
  if (noise.xi_mean_stages.size() == 1) noise.xi_mean_stages.clear();
  if (noise.xi_cov_stages.size() == 1) noise.xi_cov_stages.clear();
  return noise;
}

}  // namespace

GameSpec scenario_from_json(const json& j) {
  expect_keys(j, {"horizon", "mean_field", "players", "environment", "noise"},
              "scenario");
  GameSpec spec;
  const json& hz = require(j, "horizon", "scenario");
  if (hz.is_string()) {
    if (hz.get<std::string>() != "infinite")
      bad("horizon", "expected an integer T or the string 'infinite'");
    spec.horizon = Horizon::endless();
  } else if (hz.is_number_integer()) {
    spec.horizon = Horizon::finite(hz.get<int>());
  } else {
    bad("horizon", "expected an integer T or the string 'infinite'");
  }
  if (j.contains("mean_field")) spec.mean_field = j["mean_field"].get<bool>();

  const json& players = require(j, "players", "scenario");
  if (!players.is_array() || players.empty())
    bad("players", "expected a non-empty array");
  for (size_t i = 0; i < players.size(); ++i)
    spec.players.push_back(player_from_json(players[i], static_cast<int>(i),
                                            !spec.horizon.infinite));

  spec.environment = environment_from_json(require(j, "environment", "scenario"),
                                           players.size());
  // Omitted coupling lists default to zero blocks of the right shape.
  auto default_list = [&](std::vector<Matrix>& list, int rows, bool per_u) {
    if (!list.empty()) return;
    for (const auto& p : spec.players)
      list.push_back(Matrix::Zero(rows, per_u ? p.nu() : p.nx()));
  };
  default_list(spec.environment.B1, spec.environment.nx0(), true);
  default_list(spec.environment.B2, spec.environment.nx0(), false);
  default_list(spec.environment.E1, spec.environment.ny(), true);
  default_list(spec.environment.E2, spec.environment.ny(), false);

  spec.noise = noise_from_json(require(j, "noise", "scenario"));
  return spec;
}

GameSpec load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scenario file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("scenario parse error: ") + e.what());
  }
  try {
    return scenario_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("scenario field error: ") + e.what());
  }
}

json scenario_to_json(const GameSpec& spec) {
  json j;
  if (spec.horizon.infinite)
    j["horizon"] = "infinite";
  else
    j["horizon"] = spec.horizon.T;
  if (spec.mean_field) j["mean_field"] = true;
  json players = json::array();
  for (const auto& p : spec.players) {
    json pj;
    auto write_staged = [&](const char* key, auto getter, const Matrix& base) {
      if (p.stages.empty()) {
        pj[key] = matrix_to_json(base);
      } else {
        json arr = json::array();
        for (const auto& st : p.stages) arr.push_back(matrix_to_json(getter(st)));
        pj[key] = std::move(arr);
      }
    };
    write_staged("A", [](const PlayerStage& s) { return s.A; }, p.A);
    write_staged("B", [](const PlayerStage& s) { return s.B; }, p.B);
    write_staged("C", [](const PlayerStage& s) { return s.C; }, p.C);
    write_staged("Q_stage", [](const PlayerStage& s) { return s.Q; }, p.Q_stage);
    write_staged("R", [](const PlayerStage& s) { return s.R; }, p.R);
    write_staged("K", [](const PlayerStage& s) { return s.K; }, p.K);
    write_staged("L", [](const PlayerStage& s) { return s.L; }, p.L);
    if (p.Q_terminal.size() > 0) pj["Q_terminal"] = matrix_to_json(p.Q_terminal);
    pj["beta"] = p.beta;
    players.push_back(std::move(pj));
  }
  j["players"] = std::move(players);

  json env;
  env["A0"] = matrix_to_json(spec.environment.A0);
  env["D"] = matrix_to_json(spec.environment.D);
  auto write_list = [&](const char* key, const std::vector<Matrix>& list) {
    json arr = json::array();
    for (const auto& m : list) arr.push_back(matrix_to_json(m));
    env[key] = std::move(arr);
  };
  write_list("B1", spec.environment.B1);
  write_list("B2", spec.environment.B2);
  write_list("E1", spec.environment.E1);
  write_list("E2", spec.environment.E2);
  j["environment"] = std::move(env);

  json noise;
  noise["family"] = spec.noise.family == NoiseFamily::gaussian ? "gaussian"
                                                               : "moments_only";
  noise["x0_mean"] = vector_to_json(spec.noise.x0_mean);
  noise["x0_cov"] = matrix_to_json(spec.noise.x0_cov);
  if (spec.noise.w_mean_stages.empty()) {
    noise["w_mean"] = vector_to_json(spec.noise.w_mean);
  } else {
    json arr = json::array();
    for (const auto& v : spec.noise.w_mean_stages) arr.push_back(vector_to_json(v));
    noise["w_mean"] = std::move(arr);
  }
  if (spec.noise.w_cov_stages.empty()) {
    noise["w_cov"] = matrix_to_json(spec.noise.w_cov);
  } else {
    json arr = json::array();
    for (const auto& m : spec.noise.w_cov_stages) arr.push_back(matrix_to_json(m));
    noise["w_cov"] = std::move(arr);
  }
  if (spec.noise.xi_mean_stages.empty()) {
    noise["xi_mean"] = vector_to_json(spec.noise.xi_mean);
  } else {
    json arr = json::array();
    for (const auto& v : spec.noise.xi_mean_stages) arr.push_back(vector_to_json(v));
    noise["xi_mean"] = std::move(arr);
  }
  if (spec.noise.xi_cov_stages.empty()) {
    noise["xi_cov"] = matrix_to_json(spec.noise.xi_cov);
  } else {
    json arr = json::array();
    for (const auto& m : spec.noise.xi_cov_stages) arr.push_back(matrix_to_json(m));
    noise["xi_cov"] = std::move(arr);
  }
  j["noise"] = std::move(noise);
  return j;
}

void save_scenario(const GameSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write scenario file: " + path.string());
  out << scenario_to_json(spec).dump(2) << "\n";
}

uint64_t fnv1a_bytes(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t fnv1a_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file for hashing: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a_bytes(ss.str());
}

}  // namespace sebeu
