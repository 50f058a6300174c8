#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "wc/configspace.hpp"
#include "wc/hydrodynamics.hpp"
#include "wc/miw.hpp"
#include "wc/propagator.hpp"
#include "wc/worlds.hpp"

namespace wc::io {

inline constexpr int kSchemaVersion = 1;

/// One JSON object per frame: schema_version, time, grid, re/im arrays.
void write_frames_ndjson(std::ostream& out, const FrameStore& store, std::size_t every = 1);

/// Reads frames written by write_frames_ndjson.
std::vector<WaveField> read_frames_ndjson(std::istream& in);

/// Columns: time, q0[, q1], rho, j0[, j1], v0[, v1], node.
void write_flow_csv(std::ostream& out, const FlowFrame& flow);

/// One JSON object per trajectory: id, initial, status, samples [[t, q...], ...].
void write_trajectories_ndjson(std::ostream& out, const TrajectoryBundle& bundle);

/// Ensemble dump in the trajectory schema, with a world_id per line.
void write_ensemble_ndjson(std::ostream& out, const WorldEnsemble& ensemble);

/// Tidy table: id, time, q0[, q1], status.
void write_trajectories_csv(std::ostream& out, const TrajectoryBundle& bundle);

/// Columns: K, seed, error (per seed) plus one rms row per K with seed = "rms".
void write_convergence_csv(std::ostream& out, const ConvergenceStudy& study);

/// Opens a file for writing, creating parent directories; throws on failure.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace wc::io
