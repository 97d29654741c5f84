#pragma once

#include "sebeu/env_fixed_point.hpp"
#include "sebeu/estimator.hpp"
#include "sebeu/lq_synthesis.hpp"
#include "sebeu/scenario.hpp"
#include "sebeu/simulator.hpp"

#include <filesystem>
#include <string>

namespace sebeu {

// Synthesized gains of all players, either horizon mode.
struct GainsArtifact {
  bool infinite = false;
  std::vector<FiniteGainSchedule> finite;
  std::vector<StationaryGains> stationary;
};

ordered_json gains_to_json(const std::vector<FiniteGainSchedule>& gains);
ordered_json gains_to_json(const std::vector<StationaryGains>& gains);
GainsArtifact gains_from_json(const ordered_json& j);

ordered_json fixed_point_to_json(const EnvFixedPoint& fp);
EnvFixedPoint fixed_point_from_json(const ordered_json& j);

ordered_json model_to_json(const ClosedLoopModel& model);
ClosedLoopModel model_from_json(const ordered_json& j);

ordered_json meanfield_to_json(const MeanFieldPoint& mf);
MeanFieldPoint meanfield_from_json(const ordered_json& j);

ordered_json tolerances_to_json(const Tolerances& tol);

// Per-stage summary rows: t, var, mean, stderr (comma, UTF-8, one header row).
std::string batch_summary_csv(const SimulationBatch& batch,
                              const DimensionTable& dims);
// One row per player: cost estimate, standard error, truncation tail bound.
std::string costs_csv(const SimulationBatch& batch);
// Analytic moment trajectories: t, mean columns, flattened covariance columns.
std::string moments_csv(const MomentTrajectory& traj, const DimensionTable& dims);

// Little-endian trajectory dump. Header: magic "SEBT", u32 version, u32 x_dim,
// u32 n_y, u32 u_dim, u32 horizon, u64 paths. Body per path: X rows
// (horizon+1 x x_dim), y (horizon x n_y), u (horizon x u_dim), all row-major
// f64.
void write_trajectory_dump(const std::filesystem::path& path,
                           const SimulationBatch& batch,
                           const DimensionTable& dims);

void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);
ordered_json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const ordered_json& j);

std::vector<std::string> dimension_labels(const DimensionTable& dims);

}  // namespace sebeu
