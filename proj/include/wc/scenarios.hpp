#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "wc/configspace.hpp"
#include "wc/measure.hpp"
#include "wc/measurement.hpp"
#include "wc/state.hpp"

namespace wc {

/// Invalid scenario configuration; the message names the offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

inline constexpr const char* kVersion = "0.1.0";

struct RunSpec {
  double dt_step = 0.0;
  std::size_t n_steps = 0;
  std::size_t frame_stride = 1;
  double dt_traj = 0.0;
};

struct NamedRegion {
  std::string name;
  std::vector<Box> boxes;
};

struct ContinuityAnalysis {
  std::size_t levels = 3;
  std::size_t coarse_npoints = 128;
  double coarse_dt = 0.01;
  double time = 0.5;  // residual is taken at time / 2 of a run to `time`
  double expected_order = 2.0;
};

/// x(t) oracle for 1D bundles.
struct TrajectoryOracle {
  enum class Kind { None, GaussianSpread, Static, Uniform } kind = Kind::None;
  double sigma0 = 1.0;
  double center = 0.0;
  double velocity = 0.0;
};

struct BundleAnalysis {
  std::size_t n = 101;
  std::vector<std::pair<double, double>> range;  // per axis
  std::string seeding = "linspace";
  TrajectoryOracle oracle;
  double crossing_radius = 0.0;
  bool equivariance = true;
  std::size_t refine = 4;
  bool newtonian = true;
};

struct MeasureAnalysis {
  std::vector<NamedRegion> regions;
  std::vector<std::optional<double>> expected;
  std::string frame = "final";
  std::vector<Surface> surfaces;
};

struct MeasurementAnalysis {
  std::size_t outcome = 0;
  Point q_bar{};
  double horizon = 5.0;
  double dt_traj = 0.01;
  double control_g = 0.1;
  Point control_q_bar{};
  std::size_t dynamical_steps = 100;
};

struct MiwAnalysis {
  std::vector<std::size_t> Ks{100, 1000, 10000, 100000};
  std::vector<std::uint64_t> seeds;  // empty: derived from the global seed
  std::size_t seed_count = 8;
  std::vector<NamedRegion> regions;
  double dt = 0.02;
  std::size_t frame_subsample = 1;
  std::size_t density_K = 10000;
  std::size_t dump_K = 200;
};

struct ToyModelAnalysis {
  std::pair<double, double> domain{0.0, 1.0};
  std::size_t cells = 1024;
  std::vector<double> a_values{0.04, 0.25, 0.81};
  std::pair<double, double> density_range{0.01, 1.0};
  std::size_t density_points = 100;
};

struct QuantizationLoop {
  Point center{};
  double radius = 1.0;
  std::size_t samples = 720;
  int turns = 1;
  long expected = 0;
};

struct QuantizationAnalysis {
  std::vector<QuantizationLoop> loops;
  std::string frame = "both";
};

using AnalysisSpec = std::variant<ContinuityAnalysis, BundleAnalysis, MeasureAnalysis, MeasurementAnalysis,
                                  MiwAnalysis, ToyModelAnalysis, QuantizationAnalysis>;

std::string analysis_name(const AnalysisSpec& spec);
const std::vector<std::string>& analysis_names();

/// Post-measurement initial state Psi' built from a 1D system state.
struct MeasuredInitial {
  nlohmann::json system;
  MeasurementSetup setup;
  bool dynamical = true;
  std::size_t steps = 100;
};

struct ScenarioConfig {
  std::string name;
  std::string description;
  std::filesystem::path source;
  std::optional<Grid> grid;
  PhysicsParams params;
  std::optional<nlohmann::json> initial_state;
  std::optional<MeasuredInitial> measured;
  std::optional<RunSpec> run;
  std::vector<AnalysisSpec> analyses;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  std::map<std::string, double> tolerances;
  double runtime_budget = 60.0;
  std::size_t frames_every = 0;  // 0: first and last frame only
};

/// Parses and validates a configuration without running any numerics.
ScenarioConfig parse_config(const nlohmann::json& j, const std::filesystem::path& source = {});
ScenarioConfig load_config(const std::filesystem::path& path);

/// Builds an analytic state recipe from its JSON description.
StateRecipe parse_recipe(const nlohmann::json& j, const PhysicsParams& params, const std::string& where);

/// Initial wavefunction of a parsed configuration; measured setups yield the
/// post-measurement state on the full grid.
WaveField build_initial_state(const ScenarioConfig& config);

struct Metric {
  std::string name;
  std::string analysis;
  double value = 0.0;
  std::string comparator;  // "<=", ">=", "within", "==", "info"
  double threshold = 0.0;
  double threshold_hi = 0.0;  // upper bound for "within"
  bool pass = true;
  std::string note;
};

struct RunSummary {
  std::string scenario;
  std::filesystem::path config;
  std::uint64_t seed = 0;
  std::vector<Metric> metrics;
  nlohmann::json tables = nlohmann::json::object();
  std::vector<std::string> artifacts;
  double runtime_seconds = 0.0;

  bool pass() const;
  const Metric* find(const std::string& name) const;
  nlohmann::json to_json() const;
};

struct RunOptions {
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::uint64_t> seed;
  std::map<std::string, double> tolerances;
  bool write_artifacts = true;
};

/// Propagates the initial state (when a run section is present) and executes
/// every analysis. Numerical guard violations become failed metrics.
RunSummary run_scenario(const ScenarioConfig& config, const RunOptions& options = {});
RunSummary run_scenario(const std::filesystem::path& config_path, const RunOptions& options = {});

struct ScenarioInfo {
  std::string name;
  std::string description;
  std::filesystem::path path;
};

/// Bundled scenarios shipped with the sources.
std::filesystem::path default_scenario_dir();
std::vector<ScenarioInfo> list_scenarios(const std::filesystem::path& dir = default_scenario_dir());

/// Plain-text metric table for a summary document.
std::string render_report(const nlohmann::json& summary);

/// Default threshold of a named metric, before config and CLI overrides.
double default_tolerance(const std::string& metric);

}  // namespace wc
