#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "georabi/dynamics.hpp"
#include "georabi/model.hpp"
#include "georabi/paths.hpp"
#include "georabi/result_table.hpp"

namespace georabi::experiment {

enum class ModelKind { deltawell, lambda, matrix };
enum class PathKind { ellipse, circle, waypoints, static_point };
enum class RunMode { full, rwa, geometric, all };
enum class SweepKind { none, path_scale, radius, amplitude_grid };

struct ModelConfig {
  ModelKind kind = ModelKind::deltawell;
  // deltawell
  double a = 44.0, gamma_l = 1.0, gamma_r = 0.5, beta = 7.8 / 44.0;
  // lambda
  double e_g = 0.0, e_e = 25.0, dipole = 1.0;
  // matrix
  Mat h0, drive;
  RoleMap roles;
};

struct PathConfig {
  PathKind kind = PathKind::static_point;
  // ellipse (delta well depth path); amplitudes in E_u or absolute units
  double lambda_r = 0.037, lambda_c = 0.024;
  bool amplitudes_in_eu = true;
  // circle (lambda system)
  double radius = 1.0, phi0 = 0.0;
  // shared traversal rate (signed; sign sets orientation)
  double omega = 1.0;
  // waypoints
  std::vector<double> times;
  std::vector<Vec> points;
  // static
  double duration = 1.0;
};

struct DriveConfig {
  double amplitude = 0.0;
  bool tracked = true;
  double omega = 0.0;  // used when not tracked
};

struct RunConfig {
  RunMode mode = RunMode::all;
  int cycles = 1;
  int steps_per_period = 48;
  int frames_per_cycle = 200;
  int geometric_segments = 2048;
  double truncation_threshold = 0.99;
  int gamma_radial_nodes = 16;
  int gamma_angular_panels = 32;
};

struct SweepConfig {
  SweepKind kind = SweepKind::none;
  std::vector<double> values;           // path-scale factors or radii
  std::vector<double> lambda_r_range;   // {lo, hi, n} for amplitude grids
  std::vector<double> lambda_c_range;
};

struct OutputConfig {
  std::string prefix = "georabi";
  int sample_stride = 1;
};

class ExperimentConfig {
 public:
  ModelConfig model;
  PathConfig path;
  DriveConfig drive;
  RunConfig run;
  SweepConfig sweep;
  OutputConfig output;

  static ExperimentConfig parse(const std::string& json_text);
  static ExperimentConfig preset(const std::string& name);
  static std::vector<std::string> preset_names();

  // Canonical form: defaults materialized, fixed key order.
  std::string canonical_json() const;
  std::string hash() const;  // FNV-1a of the canonical form, hex

  // dotted_path like "run.cycles" or "drive.amplitude"; value is JSON.
  void override_value(const std::string& dotted_path, const std::string& json_value);
};

struct RunResult {
  std::vector<ResultTable> tables;
  std::vector<std::pair<std::string, double>> scalars;
  dynamics::ValidityFlag validity = dynamics::ValidityFlag::ok;
  std::vector<std::string> notes;

  const ResultTable* table(const std::string& name) const;
  std::optional<double> scalar(const std::string& name) const;
};

// Commands: spectrum | evolve | gamma | sweep | lambda | check.
RunResult run(const ExperimentConfig& config, const std::string& command);

// CSV bytes for one table, including the provenance header. Deterministic
// unless `stamped` adds a generation timestamp line.
std::string table_csv(const ExperimentConfig& config, const std::string& command,
                      const RunResult& result, const ResultTable& table, bool stamped);

// Instantiated physics objects for a config; exposed for tests and the
// acceptance suite.
struct BuiltSystem {
  std::shared_ptr<HamiltonianModel> model;
  std::shared_ptr<const ParamPath> path;
  dynamics::DriveSchedule drive;
  dynamics::StepControl ctrl;
  // reporting helpers (delta well): energy unit and unit length
  double eu = 0.0, zeta = 0.0;
};
BuiltSystem build_system(const ExperimentConfig& config);

}  // namespace georabi::experiment
