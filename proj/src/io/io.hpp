#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "core/model.hpp"
#include "exact/solve.hpp"
#include "limit/optimize.hpp"
#include "sim/simulate.hpp"

namespace mfmdp::io {

// Shortest decimal form that parses back to the same double, so equal runs
// produce byte-identical files.
std::string format_double(double v);

void write_file(const std::filesystem::path& path, const std::string& content);

// Simulated path: one row per jump plus a closing row at the horizon.
// Columns: t, one fraction per state, applied-control segment id.
std::string trajectory_csv(const ModelSpec& model, const Trajectory& traj);

// Metadata accompanying a trajectory file.
std::string trajectory_sidecar_json(const ModelSpec& model, std::uint64_t seed,
                                    std::int64_t agents);

// Deterministic path with the applied action weights per state.
std::string limit_trajectory_csv(const ModelSpec& model, const LimitTrajectory& traj,
                                 const RelaxedControlPath& control);

// Lattice solution: per-point counts, value, and action indices when a policy
// was extracted.
std::string value_table_csv(const ModelSpec& model, const ValueTable& table);
std::string value_table_metadata_json(const ValueTable& table);

std::string optimize_result_json(const OptimizeResult& result);

}  // namespace mfmdp::io
