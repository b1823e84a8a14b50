#include "pucci/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

using namespace pucci;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json kernel_block(double alpha) {
  return {{"lambda", 1.0}, {"Lambda", 2.0}, {"alpha", alpha}, {"phi", {{"family", "power"}, {"beta", 0.5 * alpha}}}};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pucci_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Writes the config and runs the executable; returns its exit status.
int run_cli(const fs::path& dir, const std::string& command, const json& config, const std::string& extra) {
  const fs::path cfg = dir / (command + ".json");
  std::ofstream(cfg) << config.dump(2);
  const std::string cmd = std::string(PUCCI_CLI_PATH) + " " + command + " --config " + cfg.string() + " " + extra + " 2>" +
                          (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::vector<std::string> error_paths(const std::string& text) {
  std::vector<std::string> out;
  try {
    cli::parse_config(text);
  } catch (const cli::ConfigError& e) {
    for (const auto& fe : e.errors()) out.push_back(fe.path);
  }
  return out;
}

}  // namespace

TEST_CASE("parse a minimal verify-kernel config") {
  const json j = {{"command", "verify-kernel"}, {"kernel", kernel_block(1.2)}, {"samples", 50}, {"seed", 4}};
  const auto cfg = cli::parse_config(j.dump());
  CHECK(cfg.command == cli::Command::VerifyKernel);
  CHECK(cfg.spec.alpha == 1.2);
  CHECK(cfg.verify.samples == 50);
  CHECK(cfg.seed == 4);
}

TEST_CASE("config errors name the offending field") {
  json j = {{"command", "verify-kernel"}, {"kernel", kernel_block(2.5)}};
  auto paths = error_paths(j.dump());
  REQUIRE_FALSE(paths.empty());
  CHECK(paths.front().rfind("/kernel", 0) == 0);

  j = {{"command", "verify-kernel"}, {"kernel", kernel_block(1.0)}, {"sampels", 10}};
  paths = error_paths(j.dump());
  CHECK(std::find(paths.begin(), paths.end(), "/sampels") != paths.end());

  j = {{"command", "verify-kernel"}, {"kernel", kernel_block(1.0)}};
  j["kernel"]["class"] = "A4";
  j["kernel"]["phi"] = {{"family", "tabulated"}, {"beta", 0.5}, {"t", {1.0, 2.0, 3.0}}, {"values", {1.0, 0.5, 2.0}}};
  try {
    cli::parse_config(j.dump());
    FAIL("non-monotone phi accepted for A4");
  } catch (const cli::ConfigError& e) {
    REQUIRE(e.errors().size() == 1);
    CHECK(e.errors()[0].path == "/kernel");
    CHECK(e.errors()[0].message.find("non-decreasing") != std::string::npos);
  }

  CHECK_FALSE(error_paths("{not json").empty());
  CHECK_FALSE(error_paths(json{{"command", "dance"}}.dump()).empty());
}

TEST_CASE("solve config checks the grid and expressions") {
  json j = {{"command", "solve"},
            {"kernel", kernel_block(1.0)},
            {"dim", 1},
            {"grid", {{"radius", 1.0}, {"cells", 7}}},
            {"domain", "1 - r^"},
            {"operator", {{"kind", "extremal"}}}};
  const auto paths = error_paths(j.dump());
  CHECK(std::find(paths.begin(), paths.end(), "/grid/cells") != paths.end());
  CHECK(std::find(paths.begin(), paths.end(), "/domain") != paths.end());
}

TEST_CASE("atomic writes replace the target") {
  const auto dir = scratch_dir("atomic");
  const auto p = (dir / "a.txt").string();
  cli::write_atomic(p, "one");
  cli::write_atomic(p, "two");
  CHECK(slurp(p) == "two");
  CHECK_FALSE(fs::exists(p + ".tmp"));
  CHECK_THROWS_AS(cli::write_atomic((dir / "missing" / "b.txt").string(), "x"), Error);
}

TEST_CASE("barrier command: certificate and exit codes") {
  const auto dir = scratch_dir("barrier");
  json j = {{"kernel", kernel_block(1.0)}, {"dim", 1}, {"r", 1.0}};
  CHECK(run_cli(dir, "barrier", j, "--out " + (dir / "cert.json").string()) == 0);
  const json cert = json::parse(slurp(dir / "cert.json"));
  CHECK(cert["pass"] == true);
  CHECK(cert["schema_version"] == 1);
  CHECK(fs::exists(dir / "cert.points.csv"));

  // Same config, same bytes.
  CHECK(run_cli(dir, "barrier", j, "--out " + (dir / "cert2.json").string()) == 0);
  CHECK(slurp(dir / "cert.json") == slurp(dir / "cert2.json"));

  j["params"] = {{"p", 2.0}, {"delta", 0.5}};
  CHECK(run_cli(dir, "barrier", j, "--out " + (dir / "bad.json").string()) == 2);
  CHECK_FALSE(fs::exists(dir / "bad.json"));
  CHECK(run_cli(dir, "solve", j, "") == 2);
  CHECK(std::system((std::string(PUCCI_CLI_PATH) + " barrier --config /nonexistent/x.json 2>/dev/null").c_str()) != 0);
}

TEST_CASE("eval and solve commands") {
  const auto dir = scratch_dir("eval");
  const json e = {{"kernel", kernel_block(1.2)},
                  {"dim", 1},
                  {"operator", {{"kind", "extremal"}, {"variant", "minus"}}},
                  {"function", {{"expr", "(1 - x^2)^2"}, {"far_radius", 1.0}}},
                  {"h", 1.0 / 128.0}};
  std::ofstream(dir / "pts.csv") << "x1\n0\n0.5\n";
  CHECK(run_cli(dir, "eval", e, "--points " + (dir / "pts.csv").string() + " --out " + (dir / "eval.csv").string()) == 0);
  std::istringstream rows(slurp(dir / "eval.csv"));
  std::string line;
  int n = 0;
  while (std::getline(rows, line)) ++n;
  CHECK(n == 3);

  const json s = {{"kernel", kernel_block(1.2)},
                  {"dim", 1},
                  {"grid", {{"radius", 1.0}, {"cells", 32}}},
                  {"domain", "1 - r"},
                  {"f", "-1"},
                  {"g", {{"constant", 0.0}}},
                  {"operator", {{"kind", "extremal"}, {"variant", "plus"}}}};
  CHECK(run_cli(dir, "solve", s, "--out " + (dir / "u.csv").string()) == 0);
  const json summary = json::parse(slurp(dir / "u.summary.json"));
  CHECK(summary["converged"] == true);
}

TEST_CASE("lab with an empty sweep writes a header-only table") {
  const auto dir = scratch_dir("lab");
  const json j = {{"alphas", json::array()}, {"measurements", json::array()}};
  CHECK(run_cli(dir, "lab", j, "--out-dir " + dir.string()) == 0);
  const std::string csv = slurp(dir / "lab.csv");
  CHECK(csv == "measurement,alpha,phi_family,radius,quotient,gamma_hat,eps_fit,ratio_min,ratio_max,residual,cells,pass\n");
}
