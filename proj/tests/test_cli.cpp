#include <doctest.h>
#include <stochham/cli.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace stochham;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("stochham_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json minimal() {
  return json{{"system", {{"name", "circle_brownian"}}},
              {"ensemble", {{"n_paths", 10}, {"T", 0.1}, {"dt", 1e-3}, {"master_seed", 4}}},
              {"checks", json::array({{{"name", "strong_conservation"}, {"observable", "radius2"}}})}};
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

int invoke(std::vector<std::string> args, std::string* out_text = nullptr) {
  std::vector<char*> argv;
  std::string prog = "stochham";
  argv.push_back(prog.data());
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("minimal run writes three artifacts and exits 0") {
  const auto dir = scratch("minimal");
  const auto cfg = write_config(dir, minimal());
  const auto out = dir / "out";
  CHECK(invoke({"run", "--config", cfg.string(), "--out", out.string(), "--quiet"}) == cli::kOk);
  CHECK(fs::exists(out / "summary.json"));
  CHECK(fs::exists(out / "report.json"));
  CHECK(fs::exists(out / "trajectories.csv"));
  const auto report = json::parse(slurp(out / "report.json"));
  CHECK(report["all_passed"] == true);
  CHECK(report["checks"].size() == 1);
  const auto summary = json::parse(slurp(out / "summary.json"));
  CHECK(summary["schema_version"] == 1);
  CHECK(summary["seeds"].size() == 10);
  CHECK(slurp(out / "trajectories.csv").rfind("path,t,", 0) == 0);
}

TEST_CASE("invalid scheme is a config error listing valid schemes") {
  const auto dir = scratch("milstein");
  auto j = minimal();
  j["scheme"] = "milstein";
  const auto cfg = write_config(dir, j);
  CHECK(invoke({"run", "--config", cfg.string(), "--out", (dir / "out").string(), "--quiet"}) == cli::kConfigError);
  try {
    cli::parse_config(j);
    FAIL("expected a config error");
  } catch (const cli::ConfigError& e) {
    CHECK(std::string(e.what()).find("stratonovich_heun") != std::string::npos);
    CHECK(std::string(e.what()).find("ito_euler_corrected") != std::string::npos);
  }
}

TEST_CASE("config validation") {
  auto j = minimal();
  j["ensemble"]["bogus"] = 1;
  CHECK_THROWS_AS(cli::parse_config(j), cli::ConfigError);
  j = minimal();
  j["system"]["params"] = {{"nu", 0.5}};
  CHECK_THROWS_AS(cli::prepare(cli::parse_config(j)), cli::ConfigError);
  j = minimal();
  j["system"]["name"] = "nope";
  CHECK_THROWS_AS(cli::prepare(cli::parse_config(j)), cli::ConfigError);
  j = minimal();
  j["ensemble"]["dt"] = 0.03;
  CHECK_THROWS_AS(cli::prepare(cli::parse_config(j)), cli::ConfigError);
  j = minimal();
  j["checks"][0]["name"] = "liouville_everything";
  CHECK_THROWS_AS(cli::prepare(cli::parse_config(j)), cli::ConfigError);
  j = minimal();
  j["checks"][0]["observable"] = "momentum";
  CHECK_THROWS_AS(cli::prepare(cli::parse_config(j)), cli::ConfigError);
  const auto dir = scratch("missing");
  CHECK(invoke({"run", "--config", (dir / "absent.json").string(), "--quiet"}) == cli::kConfigError);
  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK(invoke({"run", "--config", (dir / "broken.json").string(), "--quiet"}) == cli::kConfigError);
}

TEST_CASE("failing checks exit 1") {
  const auto dir = scratch("failing");
  auto j = minimal();
  j["checks"] = json::array({{{"name", "strong_conservation"}, {"observable", "x"}}});
  const auto cfg = write_config(dir, j);
  CHECK(invoke({"run", "--config", cfg.string(), "--out", (dir / "out").string(), "--quiet"}) == cli::kCheckFailed);
  CHECK(json::parse(slurp(dir / "out" / "report.json"))["all_passed"] == false);
}

TEST_CASE("reruns are byte-identical and overrides apply") {
  const auto dir = scratch("rerun");
  auto j = minimal();
  j["sweep"] = {{"parameter", "dt"}, {"values", {1e-3, 5e-4}}};
  const auto cfg = write_config(dir, j);
  REQUIRE(invoke({"run", "--config", cfg.string(), "--out", (dir / "a").string(), "--quiet"}) == cli::kOk);
  REQUIRE(invoke({"run", "--config", cfg.string(), "--out", (dir / "b").string(), "--quiet"}) == cli::kOk);
  for (const char* f : {"summary.json", "report.json", "trajectories.csv", "sweep.csv"})
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  const std::string sweep = slurp(dir / "a" / "sweep.csv");
  CHECK(std::count(sweep.begin(), sweep.end(), '\n') == 3);

  REQUIRE(invoke({"run", "--config", cfg.string(), "--out", (dir / "c").string(), "--seed", "99", "--paths", "5",
                  "--quiet"}) == cli::kOk);
  const auto s = json::parse(slurp(dir / "c" / "summary.json"));
  CHECK(s["seeds"].size() == 5);
  CHECK(s["master_seed"] == 99);
  CHECK(slurp(dir / "a" / "summary.json") != slurp(dir / "c" / "summary.json"));
}

TEST_CASE("catalog listing") {
  std::string text;
  CHECK(invoke({"catalog", "--json"}, &text) == cli::kOk);
  const auto j = json::parse(text);
  CHECK(j["systems"].size() == 8);
  CHECK(j["systems"][0].contains("params"));
  CHECK(invoke({"catalog"}, &text) == cli::kOk);
  for (const auto& e : catalog()) CHECK(text.find(e.name) != std::string::npos);
}

TEST_CASE("unknown flag exits 2") {
  CHECK(invoke({"catalog", "--frobnicate"}) == cli::kConfigError);
  CHECK(invoke({"run"}) == cli::kConfigError);
  CHECK(invoke({"--help"}) == cli::kOk);
  const std::string tool = STOCHHAM_TOOL;
  CHECK(shell("'" + tool + "' --frobnicate >/dev/null 2>&1") == 2);
  CHECK(shell("'" + tool + "' catalog >/dev/null 2>&1") == 0);
}
