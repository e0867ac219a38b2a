#pragma once
// Ensembles of independent paths with reproducible per-path seeds.
//
// Per-path seed: path_seed(master, i) = splitmix64(splitmix64(master) ^ (i + 1) * 0x9E3779B97F4A7C15).
// Paths are simulated in any order by any number of workers but stored and
// reduced in path-index order, so summaries do not depend on the worker count.

#include "stochham/integrators.hpp"

#include <json.hpp>

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace stochham {

using DriverTransform = std::function<NoisePath(const NoisePath& base, Seed path_seed)>;
using InitialSampler = std::function<Vec(Seed path_seed)>;

/// Everything needed to simulate one path given a seed.
struct EnsembleModel {
  Model model;
  DriverSpec driver;               // base driver that gets sampled
  DriverTransform derive_driver;   // optional: maps the sampled base path to the actual driver
};

struct EnsembleSpec {
  std::size_t n_paths = 1;
  Seed master_seed = 0;
  double T = 1.0;
  double dt = 1e-3;
  Vec initial;                 // used when `sampler` is empty
  InitialSampler sampler;
  IntegratorConfig cfg;        // cfg.dt is overwritten with dt
  std::size_t record_every = 1;  // record grid stride; the final index is always recorded
  std::optional<Region> stop_region;
  std::size_t keep_trajectories = 0;  // full trajectories retained for the first k paths
  double max_exploded_fraction = 1e-3;
  bool fail_on_explosion_cap = true;
  std::size_t threads = 0;     // 0: STOCHHAM_THREADS or hardware concurrency
  std::size_t memory_limit_bytes = std::size_t{4} << 30;

  void validate() const;
};

Seed path_seed(Seed master, std::size_t index);
/// Worker count: explicit request, else STOCHHAM_THREADS, else hardware concurrency; at least 1.
std::size_t resolve_threads(std::size_t requested);

struct PathRecord {
  Seed seed = 0;
  PathStatus status = PathStatus::Completed;
  std::size_t terminal_index = 0;
  double exit_time = std::numeric_limits<double>::quiet_NaN();
  Vec initial;
  // Stopped process sampled on the record grid; empty for exploded paths.
  RowMatrix recorded;
};

struct Ensemble {
  double T = 0.0;
  double dt = 0.0;
  std::size_t dim = 0;
  Seed master_seed = 0;
  std::vector<std::size_t> record_indices;
  std::vector<double> record_times;
  std::vector<PathRecord> paths;
  std::vector<Trajectory> kept;

  std::size_t size() const { return paths.size(); }
  std::size_t exploded_count() const;
  /// Index into record_times of grid time t; throws if t is not on the record grid.
  std::size_t record_row(double t) const;
  Vec state(std::size_t path, std::size_t row) const;
};

Ensemble run_ensemble(const EnsembleModel& model, const EnsembleSpec& spec);
/// Regenerates the driver of path i (sample_path is pure).
NoisePath ensemble_noise(const EnsembleModel& model, const EnsembleSpec& spec, std::size_t path);
/// Full trajectory of path i, recomputed from its seed.
Trajectory ensemble_trajectory(const EnsembleModel& model, const EnsembleSpec& spec, std::size_t path);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  std::size_t exploded = 0;

  double lower(double k = 3.0) const { return mean - k * std_error; }
  double upper(double k = 3.0) const { return mean + k * std_error; }
};

Estimate mean_estimate(const std::vector<double>& samples);
/// Intervals [mean +- k*std_error] intersect.
bool intervals_overlap(const Estimate& a, const Estimate& b, double k = 3.0);

/// Stopping time evaluated on the record grid, truncated at T.
struct StoppingTime {
  enum class Kind { Fixed, FirstExit };
  Kind kind = Kind::Fixed;
  double time = 0.0;
  Region region;
  std::string label;

  static StoppingTime fixed(double t);
  static StoppingTime first_exit(Region region);
  /// Record-grid row of tau ^ T for the given path.
  std::size_t row(const Ensemble& e, const PathRecord& p) const;
};

Estimate expectation(const ScalarField& f, const Ensemble& e, double t);
/// Mean of the paired difference f(G_tau^T) - f(G_0).
Estimate expectation_increment(const ScalarField& f, const Ensemble& e, const StoppingTime& tau);
Estimate expectation_at(const ScalarField& f, const Ensemble& e, const StoppingTime& tau);

std::optional<double> first_exit_time(const Trajectory& traj, const Region& region);

/// Fraction of paths with max over the record grid up to `horizon` of f > level, binomial stderr.
Estimate sup_exceedance_probability(const Ensemble& e, const ScalarField& f, double level, double horizon);

/// {schema_version, checkpoints, means, stderrs, exit_histogram, exploded_count, seeds}
nlohmann::json summary_json(const Ensemble& e, const std::map<std::string, ScalarField>& observables,
                            const std::vector<double>& checkpoints);

}  // namespace stochham
