#include "stochham/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace stochham {

void EnsembleSpec::validate() const {
  STOCHHAM_REQUIRE(n_paths >= 1, ErrorCode::InvalidArgument, "n_paths must be at least 1");
  STOCHHAM_REQUIRE(record_every >= 1, ErrorCode::InvalidArgument, "record_every must be at least 1");
  STOCHHAM_REQUIRE(static_cast<bool>(sampler) || initial.size() > 0, ErrorCode::InvalidArgument,
                   "ensemble needs an initial state or a sampler");
  STOCHHAM_REQUIRE(max_exploded_fraction >= 0.0, ErrorCode::InvalidArgument, "max_exploded_fraction must be >= 0");
  grid_steps(T, dt, cfg.max_steps);
}

Seed path_seed(Seed master, std::size_t index) {
  return splitmix64(splitmix64(master) ^ (static_cast<std::uint64_t>(index) + 1) * 0x9E3779B97F4A7C15ULL);
}

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("STOCHHAM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::size_t Ensemble::exploded_count() const {
  return static_cast<std::size_t>(
      std::count_if(paths.begin(), paths.end(), [](const PathRecord& p) { return p.status == PathStatus::Exploded; }));
}

std::size_t Ensemble::record_row(double t) const {
  for (std::size_t r = 0; r < record_times.size(); ++r) {
    if (std::abs(record_times[r] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return r;
  }
  throw Error(ErrorCode::GridMismatch, "time " + std::to_string(t) + " is not on the record grid");
}

Vec Ensemble::state(std::size_t path, std::size_t row) const {
  return paths.at(path).recorded.row(static_cast<Eigen::Index>(row)).transpose();
}

namespace {

IntegratorConfig path_config(const EnsembleSpec& spec) {
  IntegratorConfig cfg = spec.cfg;
  cfg.dt = spec.dt;
  return cfg;
}

Vec initial_state(const EnsembleSpec& spec, Seed seed) { return spec.sampler ? spec.sampler(seed) : spec.initial; }

}  // namespace

NoisePath ensemble_noise(const EnsembleModel& model, const EnsembleSpec& spec, std::size_t path) {
  const Seed seed = path_seed(spec.master_seed, path);
  NoisePath base = sample_path(model.driver, spec.T, spec.dt, seed, spec.cfg.max_steps);
  if (model.derive_driver) return model.derive_driver(base, seed);
  return base;
}

Trajectory ensemble_trajectory(const EnsembleModel& model, const EnsembleSpec& spec, std::size_t path) {
  const Seed seed = path_seed(spec.master_seed, path);
  const NoisePath X = ensemble_noise(model, spec, path);
  return simulate(model.model, initial_state(spec, seed), X, path_config(spec), spec.stop_region);
}

Ensemble run_ensemble(const EnsembleModel& model, const EnsembleSpec& spec) {
  spec.validate();
  const std::size_t N = grid_steps(spec.T, spec.dt, spec.cfg.max_steps);

  Ensemble e;
  e.T = spec.T;
  e.dt = spec.dt;
  e.master_seed = spec.master_seed;
  for (std::size_t i = 0; i <= N; i += spec.record_every) e.record_indices.push_back(i);
  if (e.record_indices.back() != N) e.record_indices.push_back(N);
  for (std::size_t i : e.record_indices) e.record_times.push_back(static_cast<double>(i) * spec.dt);

  const Vec probe = initial_state(spec, path_seed(spec.master_seed, 0));
  e.dim = static_cast<std::size_t>(probe.size());
  const double bytes = static_cast<double>(spec.n_paths) * static_cast<double>(e.record_indices.size()) *
                       static_cast<double>(e.dim) * sizeof(double);
  STOCHHAM_REQUIRE(bytes <= static_cast<double>(spec.memory_limit_bytes), ErrorCode::ResourceLimit,
                   "ensemble record would need " + std::to_string(bytes / (1 << 20)) +
                       " MiB; raise record_every or lower n_paths");

  e.paths.resize(spec.n_paths);
  e.kept.resize(std::min(spec.keep_trajectories, spec.n_paths));

  const std::size_t workers = std::min(resolve_threads(spec.threads), spec.n_paths);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= spec.n_paths) return;
      try {
        const Seed seed = path_seed(spec.master_seed, i);
        const NoisePath X = ensemble_noise(model, spec, i);
        Vec z0 = initial_state(spec, seed);
        STOCHHAM_REQUIRE(static_cast<std::size_t>(z0.size()) == e.dim, ErrorCode::DimensionMismatch,
                         "sampler returned a state of the wrong dimension");
        Trajectory traj = simulate(model.model, z0, X, path_config(spec), spec.stop_region);

        PathRecord& rec = e.paths[i];
        rec.seed = seed;
        rec.status = traj.status;
        rec.terminal_index = traj.terminal_index;
        rec.initial = std::move(z0);
        if (traj.status == PathStatus::Exited) rec.exit_time = static_cast<double>(traj.terminal_index) * spec.dt;
        if (traj.status != PathStatus::Exploded) {
          const std::size_t last = traj.rows() - 1;
          rec.recorded.resize(static_cast<Eigen::Index>(e.record_indices.size()), static_cast<Eigen::Index>(e.dim));
          for (std::size_t r = 0; r < e.record_indices.size(); ++r) {
            rec.recorded.row(static_cast<Eigen::Index>(r)) =
                traj.states.row(static_cast<Eigen::Index>(std::min(e.record_indices[r], last)));
          }
        }
        if (i < e.kept.size()) e.kept[i] = std::move(traj);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(spec.n_paths);
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  const std::size_t exploded = e.exploded_count();
  if (spec.fail_on_explosion_cap &&
      static_cast<double>(exploded) > spec.max_exploded_fraction * static_cast<double>(spec.n_paths)) {
    throw Error(ErrorCode::ExplosionCapExceeded, std::to_string(exploded) + " of " + std::to_string(spec.n_paths) +
                                                     " paths exploded (cap " +
                                                     std::to_string(spec.max_exploded_fraction) + ")");
  }
  return e;
}

Estimate mean_estimate(const std::vector<double>& samples) {
  Estimate est;
  est.n = samples.size();
  if (samples.empty()) return est;
  double sum = 0.0;
  for (double v : samples) sum += v;
  est.mean = sum / static_cast<double>(samples.size());
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - est.mean) * (v - est.mean);
    est.std_error = std::sqrt(ss / static_cast<double>(samples.size() - 1) / static_cast<double>(samples.size()));
  }
  return est;
}

bool intervals_overlap(const Estimate& a, const Estimate& b, double k) {
  return a.lower(k) <= b.upper(k) && b.lower(k) <= a.upper(k);
}

StoppingTime StoppingTime::fixed(double t) {
  StoppingTime s;
  s.kind = Kind::Fixed;
  s.time = t;
  s.label = "t=" + std::to_string(t);
  return s;
}

StoppingTime StoppingTime::first_exit(Region region) {
  StoppingTime s;
  s.kind = Kind::FirstExit;
  s.label = "exit " + region.label;
  s.region = std::move(region);
  return s;
}

std::size_t StoppingTime::row(const Ensemble& e, const PathRecord& p) const {
  const std::size_t last = e.record_times.size() - 1;
  if (kind == Kind::Fixed) {
    if (time >= e.T) return last;
    return e.record_row(time);
  }
  for (std::size_t r = 0; r <= last; ++r) {
    if (!region.contains(p.recorded.row(static_cast<Eigen::Index>(r)).transpose())) return r;
  }
  return last;
}

namespace {

template <class Fn>
Estimate over_paths(const Ensemble& e, Fn&& fn) {
  STOCHHAM_REQUIRE(!e.paths.empty(), ErrorCode::InvalidArgument, "empty ensemble");
  std::vector<double> samples;
  samples.reserve(e.paths.size());
  for (const auto& p : e.paths) {
    if (p.status == PathStatus::Exploded) continue;
    samples.push_back(fn(p));
  }
  if (samples.empty()) throw Error(ErrorCode::AllPathsExploded, "no surviving paths in ensemble");
  Estimate est = mean_estimate(samples);
  est.exploded = e.exploded_count();
  return est;
}

}  // namespace

Estimate expectation(const ScalarField& f, const Ensemble& e, double t) {
  const std::size_t row = e.record_row(t);
  return over_paths(e, [&](const PathRecord& p) { return f(p.recorded.row(static_cast<Eigen::Index>(row)).transpose()); });
}

Estimate expectation_at(const ScalarField& f, const Ensemble& e, const StoppingTime& tau) {
  return over_paths(e, [&](const PathRecord& p) {
    return f(p.recorded.row(static_cast<Eigen::Index>(tau.row(e, p))).transpose());
  });
}

Estimate expectation_increment(const ScalarField& f, const Ensemble& e, const StoppingTime& tau) {
  return over_paths(e, [&](const PathRecord& p) {
    return f(p.recorded.row(static_cast<Eigen::Index>(tau.row(e, p))).transpose()) - f(p.recorded.row(0).transpose());
  });
}

std::optional<double> first_exit_time(const Trajectory& traj, const Region& region) {
  for (std::size_t i = 0; i < traj.rows(); ++i) {
    if (!region.contains(traj.state(i))) return traj.times[i];
  }
  return std::nullopt;
}

Estimate sup_exceedance_probability(const Ensemble& e, const ScalarField& f, double level, double horizon) {
  STOCHHAM_REQUIRE(level > 0.0, ErrorCode::InvalidArgument, "exceedance level must be positive");
  std::size_t last = 0;
  while (last + 1 < e.record_times.size() && e.record_times[last + 1] <= horizon * (1.0 + 1e-12)) ++last;
  Estimate est = over_paths(e, [&](const PathRecord& p) {
    for (std::size_t r = 0; r <= last; ++r) {
      if (f(p.recorded.row(static_cast<Eigen::Index>(r)).transpose()) > level) return 1.0;
    }
    return 0.0;
  });
  // binomial standard error
  est.std_error = std::sqrt(est.mean * (1.0 - est.mean) / static_cast<double>(est.n));
  return est;
}

nlohmann::json summary_json(const Ensemble& e, const std::map<std::string, ScalarField>& observables,
                            const std::vector<double>& checkpoints) {
  using nlohmann::json;
  json out;
  out["schema_version"] = 1;
  out["checkpoints"] = checkpoints;
  json means = json::object(), stderrs = json::object();

  std::vector<std::pair<std::string, ScalarField>> fields;
  for (std::size_t i = 0; i < e.dim; ++i) fields.emplace_back("z" + std::to_string(i + 1), coordinate_field(e.dim, i));
  for (const auto& [name, f] : observables) fields.emplace_back(name, f);

  for (const auto& [name, f] : fields) {
    json m = json::array(), s = json::array();
    for (double t : checkpoints) {
      const Estimate est = expectation(f, e, t);
      m.push_back(est.mean);
      s.push_back(est.std_error);
    }
    means[name] = m;
    stderrs[name] = s;
  }
  out["means"] = means;
  out["stderrs"] = stderrs;

  // exit counts per checkpoint interval [c_{i-1}, c_i), with c_{-1} = 0
  std::vector<std::size_t> bins(checkpoints.size() + 1, 0);
  for (const auto& p : e.paths) {
    if (p.status != PathStatus::Exited) {
      bins.back() += 1;
      continue;
    }
    std::size_t b = 0;
    while (b < checkpoints.size() && p.exit_time >= checkpoints[b]) ++b;
    bins[b] += 1;
  }
  json hist;
  hist["upper_edges"] = checkpoints;
  hist["counts"] = std::vector<std::size_t>(bins.begin(), bins.end() - 1);
  hist["beyond_or_never"] = bins.back();
  out["exit_histogram"] = hist;
  out["exploded_count"] = e.exploded_count();
  std::vector<std::uint64_t> seeds;
  seeds.reserve(e.paths.size());
  for (const auto& p : e.paths) seeds.push_back(p.seed);
  out["master_seed"] = e.master_seed;
  out["seeds"] = seeds;
  return out;
}

}  // namespace stochham
