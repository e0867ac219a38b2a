#pragma once
// Batch front-end: JSON run configurations, artifact writers and the command-line entry point.
//
// Config schema (unknown keys are rejected):
//   system:     {name, params: {key: number}}
//   ensemble:   {n_paths, T, dt, master_seed, record_every}
//   scheme:     "stratonovich_heun" | "ito_euler_corrected"
//   initial:    [numbers]                     optional, defaults to the catalog entry
//   checkpoints:[times]                       optional, defaults to 10 equally spaced times
//   checks:     [{name, observable, tolerance, times, point, paths}]
//   sweep:      {parameter, values}           "dt" or any system parameter
//   output:     {dir, trajectories_cap}
//   explosion:  {max_fraction}

#include "stochham/diagnostics.hpp"
#include "stochham/systems.hpp"

#include <json.hpp>

#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochham::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kRuntimeFault = 3 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckConfig {
  std::string name;
  std::string observable;
  std::optional<double> tolerance;  // per-check default when absent
  std::vector<double> times;
  std::optional<Vec> point;
  std::size_t paths = 10;
};

struct SweepConfig {
  std::string parameter;
  std::vector<double> values;
};

struct RunConfig {
  std::string system;
  Params params;
  std::size_t n_paths = 100;
  double T = 1.0;
  double dt = 1e-3;
  Seed master_seed = 0;
  std::size_t record_every = 0;  // 0: chosen from the grid
  Scheme scheme = Scheme::StratonovichHeun;
  std::optional<Vec> initial;
  std::vector<double> checkpoints;
  std::vector<CheckConfig> checks;
  std::optional<SweepConfig> sweep;
  std::string output_dir = "stochham_out";
  std::size_t trajectories_cap = 100;
  double max_exploded_fraction = 1e-3;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

struct Overrides {
  std::optional<std::string> out;
  std::optional<Seed> seed;
  std::optional<std::size_t> paths;
  std::optional<double> dt;
};
void apply_overrides(RunConfig& cfg, const Overrides& o);

const std::vector<std::string>& check_names();

/// A configuration resolved against the catalog; throws ConfigError.
struct PreparedRun {
  RunConfig config;
  SystemSpec system;
  EnsembleSpec ensemble;
  std::vector<double> checkpoints;
};
PreparedRun prepare(const RunConfig& cfg);

struct RunOutcome {
  bool checks_passed = true;
  nlohmann::json summary;
  nlohmann::json report;
  std::shared_ptr<const Ensemble> ensemble_cache;
};

/// Runs the ensemble and diagnostics without writing files.
RunOutcome execute(const PreparedRun& run);

/// Full run with artifacts in cfg.output_dir; returns the exit code.
int run(const RunConfig& cfg, bool quiet, std::ostream& log);

void print_catalog(std::ostream& os, bool json);

/// Command-line entry point.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace stochham::cli
