#pragma once

#include "sebeu/game_model.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <string>

namespace sebeu {

using ordered_json = nlohmann::ordered_json;

// Scenario document: sections players[], environment, noise, horizon.
// Matrices are objects {rows, cols, data(row-major)}; vectors are plain
// arrays. Any matrix/vector field may instead hold an array of T entries for
// the time-varying finite-horizon case. Unknown keys are rejected.
GameSpec load_scenario(const std::filesystem::path& path);
GameSpec scenario_from_json(const ordered_json& j);
ordered_json scenario_to_json(const GameSpec& spec);
void save_scenario(const GameSpec& spec, const std::filesystem::path& path);

// FNV-1a 64-bit over the raw file bytes; reproducibility fingerprint used in
// run manifests.
uint64_t fnv1a_file(const std::filesystem::path& path);
uint64_t fnv1a_bytes(const std::string& bytes);

ordered_json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const ordered_json& j, const std::string& field);
ordered_json vector_to_json(const Vector& v);
Vector vector_from_json(const ordered_json& j, const std::string& field);

}  // namespace sebeu
