#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

using namespace defhom::testing;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "defhom");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  Run r;
  r.code = defhom::cli::run(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "defhom_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const json& doc) {
  fs::path p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

json shipped_json(const std::string& name) {
  std::ifstream in(config_path(name));
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("check on the cubic config succeeds and prints alpha") {
  auto dir = scratch("check");
  auto r = invoke({"check", "--config", config_path("cubic"), "--out-dir", dir.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("alpha=") != std::string::npos);
  auto j = json::parse(slurp(dir / "check.json"));
  CHECK(j["nondegeneracy"]["degenerate"] == false);
  CHECK(j["meta"]["seed"] == 20240611);
}

TEST_CASE("config errors exit with 2") {
  auto dir = scratch("bad");
  auto doc = shipped_json("cubic");
  doc["d"] = {"u1 +"};
  auto r = invoke({"check", "--config", write_config(dir, doc).string(), "--out-dir", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("offset 4") != std::string::npos);

  doc = shipped_json("cubic");
  doc["unexpected"] = true;
  CHECK(invoke({"check", "--config", write_config(dir, doc).string()}).code == 2);

  CHECK(invoke({"check"}).code == 2);
  CHECK(invoke({"check", "--config", (dir / "missing.json").string()}).code == 2);
  CHECK(invoke({"frobnicate", "--config", config_path("cubic")}).code == 2);

  doc = shipped_json("cubic");
  doc["B"] = {{"breakpoints", {0, 1}}, {"values", {-0.9}}};
  auto m = invoke({"check", "--config", write_config(dir, doc).string(), "--out-dir", dir.string()});
  CHECK(m.code == 2);
}

TEST_CASE("out-of-regime solve exits with 3 and leaves the trace") {
  auto dir = scratch("stiff");
  auto r = invoke({"solve", "--config", config_path("stiff"), "--epsilon", "0.5", "--out-dir", dir.string()});
  CHECK(r.code == 3);
  auto trace = dir / "no_convergence_eps_0.5.json";
  CHECK(r.err.find(trace.string()) != std::string::npos);
  REQUIRE(fs::exists(trace));
  auto j = json::parse(slurp(trace));
  CHECK_FALSE(j["contraction_factors"].empty());
}

TEST_CASE("degenerate check exits with 3") {
  auto dir = scratch("degenerate");
  auto r = invoke({"check", "--config", config_path("degenerate"), "--out-dir", dir.string()});
  CHECK(r.code == 3);
  CHECK(r.out.find("DEGENERATE") != std::string::npos);
}

TEST_CASE("mesh cap exits with 4") {
  auto dir = scratch("cap");
  auto doc = shipped_json("cubic");
  doc["mesh"] = {{"n_target", 64}, {"cap", 100}};
  auto r = invoke({"solve", "--config", write_config(dir, doc).string(), "--epsilon", "0.001", "--out-dir",
                   dir.string()});
  CHECK(r.code == 4);
}

TEST_CASE("solve writes reports and the operator dump") {
  auto dir = scratch("solve");
  auto doc = shipped_json("cubic");
  doc["mesh"]["n_target"] = 64;
  auto cfg = write_config(dir, doc).string();
  auto r = invoke({"solve", "--config", cfg, "--epsilon", "0.0625", "--out-dir", dir.string(), "--dump-operator",
                   (dir / "fprime.bin").string()});
  CHECK(r.code == 0);
  auto j = json::parse(slurp(dir / "solve_eps_0.0625.json"));
  CHECK(j["converged"] == true);
  CHECK(j["bound_satisfied"] == true);
  CHECK(fs::exists(dir / "solution_eps_0.0625.csv"));
  CHECK(fs::file_size(dir / "fprime.bin") > 16);
  CHECK(invoke({"homogenize", "--config", cfg, "--out-dir", dir.string()}).code == 0);
  CHECK(slurp(dir / "u0.csv").rfind("# instance=cubic", 0) == 0);
}

TEST_CASE("repeated runs are byte-identical and carry hash and seed") {
  auto a = scratch("det_a");
  auto b = scratch("det_b");
  auto doc = shipped_json("cubic");
  doc["mesh"]["n_target"] = 64;
  auto cfg = write_config(a, doc).string();
  for (const auto& dir : {a, b}) {
    CHECK(invoke({"averaging", "--config", cfg, "--out-dir", dir.string(), "--seed", "77"}).code == 0);
    CHECK(invoke({"rates", "--config", cfg, "--out-dir", dir.string(), "--epsilon", "0.125", "--epsilon", "0.0625",
                  "--epsilon", "0.03125", "--epsilon", "0.015625"})
              .code == 0);
  }
  for (const char* f : {"averaging.csv", "averaging.json", "rates.json", "rates_B.csv"}) {
    CAPTURE(f);
    auto ta = slurp(a / f);
    CHECK(ta == slurp(b / f));
    CHECK(ta.find(defhom::load_config(cfg).hash) != std::string::npos);
  }
  CHECK(slurp(a / "averaging.json").find("\"seed\": 77") != std::string::npos);
}

TEST_CASE("oracle-compare --refine runs s and 2s") {
  auto dir = scratch("oracle");
  auto doc = shipped_json("linear");
  doc["mesh"]["n_target"] = 64;
  auto r = invoke({"oracle-compare", "--config", write_config(dir, doc).string(), "--epsilon", "0.125", "--refine",
                   "2", "--out-dir", dir.string()});
  CHECK(r.code == 0);
  auto j = json::parse(slurp(dir / "oracle_compare_eps_0.125.json"));
  REQUIRE(j["rows"].size() == 2);
  CHECK(j["rows"][0]["s"] == 2);
  CHECK(j["rows"][1]["s"] == 4);
  CHECK(j["invariants"]["within_tolerance"] == true);
  CHECK(fs::exists(dir / "oracle_eps_0.125_s4.csv"));
}

TEST_CASE("remaining subcommands run on the system config") {
  auto dir = scratch("system");
  auto doc = shipped_json("system");
  doc["mesh"]["n_target"] = 64;
  doc["epsilons"] = {0.25, 0.125, 0.0625, 0.03125};
  auto cfg = write_config(dir, doc).string();
  CHECK(invoke({"opnorm-demo", "--config", cfg, "--out-dir", dir.string()}).code == 0);
  CHECK(fs::exists(dir / "opnorm.json"));
  CHECK(invoke({"averaging", "--config", cfg, "--out-dir", dir.string()}).code == 0);
  auto s = invoke({"sweep-defects", "--config", config_path("cubic"), "--out-dir", dir.string(), "--epsilon", "0.125",
                   "--epsilon", "0.0625", "--epsilon", "0.03125", "--epsilon", "0.015625"});
  CHECK(s.code == 0);
  CHECK(fs::exists(dir / "sweep_dip.csv"));
  auto one = invoke({"rates", "--config", cfg, "--out-dir", dir.string(), "--epsilon", "0.1"});
  CHECK(one.code == 2);
}
