#include "stochham/cli.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace stochham::cli {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::string& where, std::set<std::string> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) {
      std::string names;
      for (const auto& a : allowed) names += (names.empty() ? "" : ", ") + a;
      throw ConfigError("unknown key '" + k + "' in " + where + "; valid keys: " + names);
    }
  }
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + " must be finite");
  return v;
}

std::size_t count(const json& j, const std::string& where) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) throw ConfigError(where + " must be a nonnegative integer");
  if (j.is_number_integer() && j.get<long long>() < 0) throw ConfigError(where + " must be a nonnegative integer");
  return j.get<std::size_t>();
}

Seed seed_value(const json& j, const std::string& where) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) return static_cast<Seed>(j.get<long long>());
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    std::size_t pos = 0;
    try {
      const unsigned long long v = std::stoull(s, &pos, 0);
      if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
  }
  throw ConfigError(where + " must be an unsigned 64-bit integer");
}

std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + " must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

bool on_grid(double t, double step) {
  const double k = t / step;
  return std::abs(k - std::round(k)) <= 1e-9 * std::max(1.0, k);
}

}  // namespace

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names{"strong_conservation", "weak_conservation", "involution",
                                              "casimir",  "symplectic_defect", "dirichlet",
                                              "lyapunov", "closed_form_error"};
  return names;
}

RunConfig parse_config(const json& j) {
  only_keys(j, "config", {"system", "ensemble", "scheme", "initial", "checkpoints", "checks", "sweep", "output",
                          "explosion"});
  RunConfig c;
  if (!j.contains("system")) throw ConfigError("config needs a 'system' section");
  const json& sys = j["system"];
  only_keys(sys, "system", {"name", "params"});
  if (!sys.contains("name") || !sys["name"].is_string()) throw ConfigError("system.name must be a string");
  c.system = sys["name"].get<std::string>();
  if (sys.contains("params")) {
    if (!sys["params"].is_object()) throw ConfigError("system.params must be an object");
    for (const auto& [k, v] : sys["params"].items()) c.params[k] = number(v, "system.params." + k);
  }

  if (j.contains("ensemble")) {
    const json& e = j["ensemble"];
    only_keys(e, "ensemble", {"n_paths", "T", "dt", "master_seed", "record_every"});
    if (e.contains("n_paths")) c.n_paths = count(e["n_paths"], "ensemble.n_paths");
    if (e.contains("T")) c.T = number(e["T"], "ensemble.T");
    if (e.contains("dt")) c.dt = number(e["dt"], "ensemble.dt");
    if (e.contains("master_seed")) c.master_seed = seed_value(e["master_seed"], "ensemble.master_seed");
    if (e.contains("record_every")) c.record_every = count(e["record_every"], "ensemble.record_every");
  }
  if (j.contains("scheme")) {
    if (!j["scheme"].is_string()) throw ConfigError("scheme must be a string");
    try {
      c.scheme = parse_scheme(j["scheme"].get<std::string>());
    } catch (const Error& err) {
      throw ConfigError(err.what());
    }
  }
  if (j.contains("initial")) c.initial = to_vec(numbers(j["initial"], "initial"));
  if (j.contains("checkpoints")) c.checkpoints = numbers(j["checkpoints"], "checkpoints");

  if (j.contains("checks")) {
    if (!j["checks"].is_array()) throw ConfigError("checks must be an array");
    for (std::size_t i = 0; i < j["checks"].size(); ++i) {
      const json& cj = j["checks"][i];
      const std::string where = "checks[" + std::to_string(i) + "]";
      only_keys(cj, where, {"name", "observable", "tolerance", "times", "point", "paths"});
      CheckConfig ck;
      if (!cj.contains("name") || !cj["name"].is_string()) throw ConfigError(where + ".name must be a string");
      ck.name = cj["name"].get<std::string>();
      bool known = false;
      for (const auto& n : check_names()) known = known || n == ck.name;
      if (!known) {
        std::string names;
        for (const auto& n : check_names()) names += (names.empty() ? "" : ", ") + n;
        throw ConfigError("unknown check '" + ck.name + "'; valid checks: " + names);
      }
      if (cj.contains("observable")) {
        if (!cj["observable"].is_string()) throw ConfigError(where + ".observable must be a string");
        ck.observable = cj["observable"].get<std::string>();
      }
      if (cj.contains("tolerance")) ck.tolerance = number(cj["tolerance"], where + ".tolerance");
      if (cj.contains("times")) ck.times = numbers(cj["times"], where + ".times");
      if (cj.contains("point")) ck.point = to_vec(numbers(cj["point"], where + ".point"));
      if (cj.contains("paths")) ck.paths = count(cj["paths"], where + ".paths");
      c.checks.push_back(ck);
    }
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    only_keys(s, "sweep", {"parameter", "values"});
    if (!s.contains("parameter") || !s["parameter"].is_string()) throw ConfigError("sweep.parameter must be a string");
    SweepConfig sw{s["parameter"].get<std::string>(), s.contains("values") ? numbers(s["values"], "sweep.values")
                                                                           : std::vector<double>{}};
    if (sw.values.empty()) throw ConfigError("sweep.values must be a nonempty array");
    c.sweep = sw;
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    only_keys(o, "output", {"dir", "trajectories_cap"});
    if (o.contains("dir")) {
      if (!o["dir"].is_string()) throw ConfigError("output.dir must be a string");
      c.output_dir = o["dir"].get<std::string>();
    }
    if (o.contains("trajectories_cap")) c.trajectories_cap = count(o["trajectories_cap"], "output.trajectories_cap");
  }
  if (j.contains("explosion")) {
    only_keys(j["explosion"], "explosion", {"max_fraction"});
    if (j["explosion"].contains("max_fraction"))
      c.max_exploded_fraction = number(j["explosion"]["max_fraction"], "explosion.max_fraction");
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in '" + path + "': " + e.what());
  }
  return parse_config(j);
}

void apply_overrides(RunConfig& cfg, const Overrides& o) {
  if (o.out) cfg.output_dir = *o.out;
  if (o.seed) cfg.master_seed = *o.seed;
  if (o.paths) cfg.n_paths = *o.paths;
  if (o.dt) cfg.dt = *o.dt;
}

PreparedRun prepare(const RunConfig& cfg) {
  PreparedRun r;
  r.config = cfg;
  try {
    r.system = build_system(cfg.system, cfg.params);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const SystemSpec& sys = r.system;
  if (cfg.n_paths == 0) throw ConfigError("ensemble.n_paths must be at least 1");
  if (!(cfg.T > 0.0)) throw ConfigError("ensemble.T must be positive");
  if (!(cfg.dt > 0.0)) throw ConfigError("ensemble.dt must be positive");
  std::size_t N = 0;
  try {
    N = grid_steps(cfg.T, cfg.dt);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (cfg.initial && static_cast<std::size_t>(cfg.initial->size()) != sys.dim())
    throw ConfigError("initial has " + std::to_string(cfg.initial->size()) + " entries but " + sys.name + " has " +
                      std::to_string(sys.dim()) + " coordinates");

  std::size_t stride = cfg.record_every;
  if (stride == 0) stride = (N > 1000 && N % 1000 == 0) ? N / 1000 : 1;
  if (stride > N) throw ConfigError("ensemble.record_every exceeds the number of steps");
  const double record_dt = static_cast<double>(stride) * cfg.dt;

  r.checkpoints = cfg.checkpoints;
  if (r.checkpoints.empty()) {
    for (int i = 1; i <= 10; ++i) {
      const double t = cfg.T * i / 10.0;
      if (on_grid(t, record_dt)) r.checkpoints.push_back(t);
    }
    if (r.checkpoints.empty() || r.checkpoints.back() != cfg.T) r.checkpoints.push_back(cfg.T);
  }
  for (double t : r.checkpoints) {
    if (t < 0.0 || t > cfg.T * (1.0 + 1e-12) || !(on_grid(t, record_dt) || std::abs(t - cfg.T) <= 1e-12 * cfg.T))
      throw ConfigError("checkpoint " + std::to_string(t) + " is not on the record grid (step " +
                        std::to_string(record_dt) + ")");
  }

  auto known_observable = [&](const std::string& name) {
    if (sys.observables.count(name)) return true;
    for (const auto& c : sys.coordinates)
      if (c == name) return true;
    return false;
  };
  for (const auto& ck : cfg.checks) {
    const bool needs_obs = ck.name == "strong_conservation" || ck.name == "weak_conservation" ||
                           ck.name == "involution" || ck.name == "dirichlet" || ck.name == "lyapunov";
    if (needs_obs && !known_observable(ck.observable)) {
      std::string names;
      for (const auto& [k, v] : sys.observables) names += (names.empty() ? "" : ", ") + k;
      for (const auto& c : sys.coordinates) names += ", " + c;
      throw ConfigError("check " + ck.name + " needs an observable of " + sys.name + "; available: " + names);
    }
    if ((ck.name == "involution" || ck.name == "symplectic_defect") && !sys.hamiltonian)
      throw ConfigError("check " + ck.name + " requires a Hamiltonian system; " + sys.name + " is not");
    if (ck.name == "symplectic_defect" && !sys.symplectic)
      throw ConfigError("check symplectic_defect requires a symplectic chart; " + sys.name + " has none");
    if (ck.name == "casimir" && (!sys.hamiltonian || sys.hamiltonian_system().structure.casimirs().empty()))
      throw ConfigError("check casimir requires a structure with Casimir functions");
    if (ck.name == "closed_form_error" && !sys.closed_form)
      throw ConfigError("check closed_form_error requires a closed form; " + sys.name + " has none");
    if (ck.name == "dirichlet" && !ck.point && sys.equilibria.empty())
      throw ConfigError("check dirichlet needs a point");
    if (ck.name == "lyapunov" && sys.equilibria.empty() && !ck.point)
      throw ConfigError("check lyapunov needs an equilibrium point");
    if (ck.point && static_cast<std::size_t>(ck.point->size()) != sys.dim())
      throw ConfigError("check " + ck.name + " point has the wrong dimension");
    for (double t : ck.times)
      if (!on_grid(t, record_dt) || t < 0.0 || t > cfg.T * (1.0 + 1e-12))
        throw ConfigError("check " + ck.name + " time " + std::to_string(t) + " is not on the record grid");
  }
  if (cfg.sweep) {
    const auto& p = cfg.sweep->parameter;
    bool ok = p == "dt";
    for (const auto& s : catalog_entry(sys.name).params) ok = ok || s.name == p;
    if (!ok) throw ConfigError("sweep parameter '" + p + "' is neither dt nor a parameter of " + sys.name);
    for (double v : cfg.sweep->values) {
      try {
        if (p == "dt") {
          if (!(v > 0.0)) throw ConfigError("sweep dt values must be positive");
          const std::size_t n = grid_steps(cfg.T, v);
          for (double t : r.checkpoints)
            if (!on_grid(t, v)) throw ConfigError("checkpoint " + std::to_string(t) + " is off the sweep grid");
          (void)n;
        } else {
          Params q = cfg.params;
          q[p] = v;
          build_system(sys.name, q);
        }
      } catch (const Error& e) {
        throw ConfigError("sweep value " + std::to_string(v) + ": " + e.what());
      }
    }
  }

  EnsembleSpec& es = r.ensemble;
  es.n_paths = cfg.n_paths;
  es.master_seed = cfg.master_seed;
  es.T = cfg.T;
  es.dt = cfg.dt;
  es.initial = cfg.initial ? *cfg.initial : sys.default_initial;
  if (!cfg.initial) es.sampler = sys.sampler;
  es.cfg.scheme = cfg.scheme;
  es.cfg.dt = cfg.dt;
  es.record_every = stride;
  es.max_exploded_fraction = cfg.max_exploded_fraction;
  const std::size_t rows = N / stride + 2;
  const double bytes = static_cast<double>(rows) * static_cast<double>(sys.dim()) * 8.0 * static_cast<double>(cfg.n_paths);
  if (bytes > static_cast<double>(es.memory_limit_bytes))
    throw ConfigError("recorded states would need " + std::to_string(bytes / (1 << 20)) +
                      " MiB; raise ensemble.record_every");
  try {
    es.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return r;
}

}  // namespace stochham::cli
