#include "stochham/cli.hpp"
#include "stochham/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace stochham::cli {

using nlohmann::json;

namespace {

ScalarField observable(const SystemSpec& sys, const std::string& name) {
  auto it = sys.observables.find(name);
  if (it != sys.observables.end()) return it->second;
  for (std::size_t i = 0; i < sys.coordinates.size(); ++i)
    if (sys.coordinates[i] == name) return coordinate_field(sys.dim(), i);
  throw Error(ErrorCode::UnknownName, "unknown observable " + name);
}

double default_tolerance(const std::string& check) {
  if (check == "involution") return 1e-10;
  if (check == "symplectic_defect") return 1e-2;
  if (check == "closed_form_error") return 1e-2;
  if (check == "weak_conservation" || check == "lyapunov") return 0.0;
  return 1e-3;
}

std::vector<StoppingTime> stopping_times(const CheckConfig& ck, const std::vector<double>& checkpoints) {
  std::vector<StoppingTime> out;
  for (double t : ck.times.empty() ? checkpoints : ck.times) out.push_back(StoppingTime::fixed(t));
  return out;
}

DiagnosticsReport combine(std::string name, const std::vector<DiagnosticsReport>& parts, double tol) {
  DiagnosticsReport rep;
  rep.name = std::move(name);
  rep.tolerance = tol;
  json per = json::array();
  for (const auto& p : parts) {
    rep.statistic = std::max(rep.statistic, p.statistic);
    per.push_back(to_json(p));
  }
  rep.details["parts"] = per;
  rep.decide();
  return rep;
}

DiagnosticsReport evaluate(const CheckConfig& ck, const PreparedRun& run, const Ensemble& e) {
  const SystemSpec& sys = run.system;
  const double tol = ck.tolerance.value_or(default_tolerance(ck.name));
  const std::size_t k = std::min(ck.paths, run.ensemble.n_paths);
  DiagnosticsReport rep;
  if (ck.name == "strong_conservation") {
    rep = strong_conservation_check(observable(sys, ck.observable), e, tol);
  } else if (ck.name == "weak_conservation") {
    rep = weak_conservation_check(observable(sys, ck.observable), e, stopping_times(ck, run.checkpoints), tol);
  } else if (ck.name == "involution") {
    const auto& hs = sys.hamiltonian_system();
    std::vector<Vec> probes;
    for (std::size_t i = 0; i < e.paths.size() && probes.size() < 64; ++i) {
      const auto& p = e.paths[i];
      if (p.status == PathStatus::Exploded) continue;
      probes.push_back(p.initial);
      probes.push_back(p.recorded.row(p.recorded.rows() - 1).transpose());
    }
    rep = involution_check(hs.structure, observable(sys, ck.observable), hs.hamiltonian, probes, tol);
  } else if (ck.name == "casimir") {
    std::vector<DiagnosticsReport> parts;
    for (const auto& c : sys.hamiltonian_system().structure.casimirs())
      parts.push_back(strong_conservation_check(c, e, tol));
    rep = combine("casimir", parts, tol);
  } else if (ck.name == "symplectic_defect") {
    const auto& hs = sys.hamiltonian_system();
    const EnsembleModel em = sys.ensemble_model();
    std::vector<DiagnosticsReport> parts;
    IntegratorConfig cfg = run.ensemble.cfg;
    cfg.dt = run.ensemble.dt;
    for (std::size_t i = 0; i < k; ++i) {
      const Trajectory traj = ensemble_trajectory(em, run.ensemble, i);
      if (traj.status != PathStatus::Completed) continue;
      const NoisePath X = ensemble_noise(em, run.ensemble, i);
      parts.push_back(symplectic_defect(tangent_flow(hs.structure, hs.hamiltonian, traj, X, cfg),
                                        canonical_omega(sys.dim()), tol));
    }
    rep = combine("symplectic_defect", parts, tol);
  } else if (ck.name == "dirichlet") {
    rep = dirichlet_certificate(observable(sys, ck.observable), ck.point ? *ck.point : sys.equilibria.front());
  } else if (ck.name == "lyapunov") {
    rep = lyapunov_check(observable(sys, ck.observable), e, stopping_times(ck, run.checkpoints),
                         ck.point ? *ck.point : sys.equilibria.front(), tol);
  } else {
    const EnsembleModel em = sys.ensemble_model();
    rep.name = "closed_form_error";
    rep.tolerance = tol;
    for (std::size_t i = 0; i < k; ++i) {
      const auto& p = e.paths[i];
      if (p.status == PathStatus::Exploded) continue;
      const Trajectory ref = closed_form_reference(sys, ensemble_noise(em, run.ensemble, i), p.initial);
      const Vec zT = p.recorded.row(p.recorded.rows() - 1).transpose();
      rep.statistic = std::max(rep.statistic, (zT - ref.state(std::min(p.terminal_index, ref.rows() - 1))).norm());
    }
    rep.details["paths"] = k;
    rep.decide();
  }
  if (!ck.observable.empty()) rep.details["observable"] = ck.observable;
  return rep;
}

std::string check_label(const CheckConfig& ck) {
  return ck.observable.empty() ? ck.name : ck.name + ":" + ck.observable;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + p.string());
}

void write_trajectories(const std::filesystem::path& p, const Ensemble& e, const SystemSpec& sys, std::size_t cap) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
  out << "path,t";
  for (const auto& c : sys.coordinates) out << ',' << c;
  out << ",status\n";
  for (std::size_t i = 0; i < std::min(cap, e.paths.size()); ++i) {
    const auto& path = e.paths[i];
    for (Eigen::Index r = 0; r < path.recorded.rows(); ++r) {
      out << i << ',' << io::format_double(e.record_times[static_cast<std::size_t>(r)]);
      for (Eigen::Index c = 0; c < path.recorded.cols(); ++c) out << ',' << io::format_double(path.recorded(r, c));
      out << ',';
      if (r + 1 == path.recorded.rows()) out << to_string(path.status);
      out << '\n';
    }
    if (path.recorded.rows() == 0) out << i << ",,," << to_string(path.status) << '\n';
  }
}

}  // namespace

RunOutcome execute(const PreparedRun& run) {
  const SystemSpec& sys = run.system;
  const Ensemble e = run_ensemble(sys.ensemble_model(), run.ensemble);
  RunOutcome out;
  out.summary = summary_json(e, sys.observables, run.checkpoints);
  out.summary["system"] = {{"name", sys.name}, {"params", sys.params}, {"coordinates", sys.coordinates}};
  out.summary["ensemble"] = {{"n_paths", run.ensemble.n_paths},
                             {"T", run.ensemble.T},
                             {"dt", run.ensemble.dt},
                             {"record_every", run.ensemble.record_every},
                             {"scheme", sys.hamiltonian ? to_string(run.ensemble.cfg.scheme) : std::string("ito_euler_maruyama")}};

  json checks = json::array();
  for (const auto& ck : run.config.checks) {
    DiagnosticsReport rep;
    try {
      rep = evaluate(ck, run, e);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::PreconditionViolated) throw;
      rep.name = ck.name;
      rep.statistic = std::numeric_limits<double>::infinity();
      rep.tolerance = ck.tolerance.value_or(default_tolerance(ck.name));
      rep.passed = false;
      rep.details["refused"] = err.what();
    }
    out.checks_passed = out.checks_passed && rep.passed;
    json j = to_json(rep);
    j["label"] = check_label(ck);
    checks.push_back(j);
  }
  out.report = {{"schema_version", 1}, {"system", sys.name}, {"checks", checks}, {"all_passed", out.checks_passed}};
  out.report["exploded_count"] = e.exploded_count();
  out.ensemble_cache = std::make_shared<Ensemble>(e);
  return out;
}

int run(const RunConfig& cfg, bool quiet, std::ostream& log) {
  PreparedRun prepared;
  try {
    prepared = prepare(cfg);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    RunOutcome base = execute(prepared);
    write_text(dir / "summary.json", base.summary.dump(2) + "\n");
    write_text(dir / "report.json", base.report.dump(2) + "\n");
    write_trajectories(dir / "trajectories.csv", *base.ensemble_cache, prepared.system, cfg.trajectories_cap);
    if (!quiet) {
      log << prepared.system.name << ": " << cfg.n_paths << " paths, T=" << cfg.T << ", dt=" << cfg.dt << ", "
          << base.ensemble_cache->exploded_count() << " exploded\n";
      for (const auto& c : base.report["checks"])
        log << "  " << (c["passed"].get<bool>() ? "PASS " : "FAIL ") << c["label"].get<std::string>()
            << " statistic=" << c["statistic"].dump() << " tolerance=" << c["tolerance"].dump() << '\n';
    }

    if (cfg.sweep) {
      std::ofstream sweep(dir / "sweep.csv", std::ios::binary);
      if (!sweep) throw Error(ErrorCode::Io, "cannot write sweep.csv");
      sweep << cfg.sweep->parameter << ",exploded_count";
      for (const auto& ck : cfg.checks) sweep << ',' << check_label(ck) << "_statistic," << check_label(ck) << "_passed";
      std::vector<std::string> obs;
      for (const auto& [name, f] : prepared.system.observables) obs.push_back(name);
      for (const auto& name : obs) sweep << ",mean_" << name << "_T,stderr_" << name << "_T";
      sweep << '\n';
      for (double v : cfg.sweep->values) {
        RunConfig c = cfg;
        if (cfg.sweep->parameter == "dt") c.dt = v;
        else c.params[cfg.sweep->parameter] = v;
        c.record_every = 0;
        PreparedRun pr;
        try {
          pr = prepare(c);
        } catch (const ConfigError& e) {
          log << "config error in sweep: " << e.what() << '\n';
          return kConfigError;
        }
        pr.checkpoints = {c.T};
        const RunOutcome r = execute(pr);
        sweep << io::format_double(v) << ',' << r.report["exploded_count"].get<std::size_t>();
        for (const auto& chk : r.report["checks"])
          sweep << ',' << io::format_double(chk["statistic"].get<double>()) << ','
                << (chk["passed"].get<bool>() ? 1 : 0);
        for (const auto& name : obs)
          sweep << ',' << io::format_double(r.summary["means"][name][0].get<double>()) << ','
                << io::format_double(r.summary["stderrs"][name][0].get<double>());
        sweep << '\n';
        if (!quiet) log << "  sweep " << cfg.sweep->parameter << "=" << io::format_double(v) << " done\n";
      }
    }
    return base.checks_passed ? kOk : kCheckFailed;
  } catch (const std::exception& e) {
    log << "runtime fault: " << e.what() << '\n';
    return kRuntimeFault;
  }
}

void print_catalog(std::ostream& os, bool as_json) {
  if (as_json) {
    os << catalog_json().dump(2) << '\n';
    return;
  }
  for (const auto& e : catalog()) {
    os << e.name << (e.hamiltonian ? "" : " (non-Hamiltonian)") << (e.closed_form ? " [closed form]" : "") << '\n';
    os << "  " << e.summary << '\n';
    os << "  anchor: " << e.anchor << '\n';
    for (const auto& p : e.params)
      os << "  - " << p.name << " = " << io::format_double(p.default_value) << "  " << p.description << '\n';
  }
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic Hamiltonian simulation and diagnostics"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "Run a configuration and write artifacts");
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  std::size_t paths = 0;
  double dt = 0.0;
  bool quiet = false;
  run_cmd->add_option("--config", config_path, "Run configuration (JSON)")->required();
  auto* out_opt = run_cmd->add_option("--out", out_dir, "Output directory");
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Master seed override");
  auto* paths_opt = run_cmd->add_option("--paths", paths, "Number of paths override");
  auto* dt_opt = run_cmd->add_option("--dt", dt, "Step size override");
  run_cmd->add_flag("--quiet", quiet, "Suppress progress output");

  auto* cat_cmd = app.add_subcommand("catalog", "List catalog systems and their parameters");
  bool as_json = false;
  cat_cmd->add_flag("--json", as_json, "Machine-readable listing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kConfigError;
  }

  if (cat_cmd->parsed()) {
    print_catalog(out, as_json);
    return kOk;
  }
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  Overrides o;
  if (out_opt->count()) o.out = out_dir;
  if (seed_opt->count()) o.seed = seed;
  if (paths_opt->count()) o.paths = paths;
  if (dt_opt->count()) o.dt = dt;
  apply_overrides(cfg, o);
  return run(cfg, quiet, err);
}

}  // namespace stochham::cli
