#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "defhom/errors.hpp"
#include "defhom/report_io.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace defhom;
using namespace defhom::testing;
using json = nlohmann::json;

namespace {

const char* kMinimal = R"({"n": 1, "A": {"breakpoints": [0, 1], "values": [1]}, "c": ["0"], "d": ["u1"]})";

json minimal() { return json::parse(kMinimal); }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("fnv1a") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("minimal config and defaults") {
  auto cfg = parse_config(kMinimal);
  CHECK(cfg.n == 1);
  CHECK(cfg.name == "instance");
  CHECK(cfg.refine == std::vector<std::size_t>{1, 2, 4});
  CHECK(cfg.study.solver.tol == 1e-11);
  CHECK(cfg.hash.size() == 16);
  auto inst = cfg.instance(0.25);
  CHECK(inst.eps == 0.25);
  CHECK(inst.dim() == 1);
  // Key order and whitespace do not change the hash.
  auto reordered = parse_config(R"({ "d": ["u1"], "c": ["0"],
      "A": {"values": [1], "breakpoints": [0, 1]}, "n": 1 })");
  CHECK(reordered.hash == cfg.hash);
  auto other = minimal();
  other["seed"] = 5;
  CHECK(parse_config(other.dump()).hash != cfg.hash);
}

TEST_CASE("schema violations") {
  auto expect_config_error = [](json doc) { CHECK_THROWS_AS(parse_config(doc.dump()), ConfigError); };
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  auto j = minimal();
  j["bogus"] = 1;
  expect_config_error(j);
  j = minimal();
  j.erase("A");
  expect_config_error(j);
  j = minimal();
  j["n"] = 0;
  expect_config_error(j);
  j = minimal();
  j["c"] = {"0", "0"};
  expect_config_error(j);
  j = minimal();
  j["epsilons"] = {0.1, -0.1};
  expect_config_error(j);
  j = minimal();
  j["mesh"] = {{"n_target", 8}, {"extra", 1}};
  expect_config_error(j);
  j = minimal();
  j["A"]["values"] = {1, 2};
  expect_config_error(j);
  j = minimal();
  j["defects"] = json::array({{{"id", "x"}, {"breakpoints", {0, 1}}}});
  expect_config_error(j);
  j = minimal();
  j["refine"] = {0};
  expect_config_error(j);
  j = minimal();
  j["d"] = {"u1 +"};
  try {
    parse_config(j.dump()).instance();
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
  }
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"cubic", "stiff", "linear", "forcing", "system", "degenerate", "qplus"}) {
    CAPTURE(name);
    auto cfg = shipped(name);
    CHECK(cfg.name == name);
    CHECK_NOTHROW(validate_instance(cfg.instance(0.1)));
  }
  auto sys = shipped("system");
  CHECK(sys.n == 2);
  CHECK(sys.x_breakpoints == std::vector<double>{0.5});
  CHECK(sys.averaging_u.size() == 2);
  auto cubic = shipped("cubic");
  REQUIRE(cubic.defects.size() == 3);
  CHECK(cubic.defects[1].id == "dip");
}

TEST_CASE("reports embed the hash and seed") {
  auto cfg = shipped("cubic");
  auto meta = meta_for(cfg);
  CHECK(meta.config_hash == cfg.hash);
  CHECK(meta.seed == cfg.seed);
  auto mesh = std::make_shared<const Mesh>(Mesh::uniform(2));
  auto u = GridFunction::sample(mesh, 1, [](double x) { return Vector::Constant(1, x * x); });
  auto csv = grid_csv(u, meta);
  CHECK(csv.rfind("# instance=cubic config_hash=" + cfg.hash + " seed=" + std::to_string(cfg.seed), 0) == 0);
  CHECK(csv.find("\nx,u1\n0,0\n0.5,0.25\n1,1\n") != std::string::npos);

  SolveReport r;
  r.alpha = 0.5;
  r.residual_history = {1e-3, 1e-6};
  auto j = json::parse(solve_report_json(r, meta));
  CHECK(j["meta"]["config_hash"] == cfg.hash);
  CHECK(j["meta"]["seed"] == cfg.seed);
  CHECK(j["rho"] == 4.0);

  NoConvergence nc("diverged", {1.0, 2.0}, {2.0});
  auto k = json::parse(no_convergence_json(nc, 0.5, meta));
  CHECK(k["contraction_factors"].size() == 1);
  CHECK(k["meta"]["seed"] == cfg.seed);

  auto dir = std::filesystem::temp_directory_path() / "defhom_io_test";
  std::filesystem::remove_all(dir);
  write_text(dir / "nested" / "u.csv", csv);
  CHECK(slurp(dir / "nested" / "u.csv") == csv);
  std::filesystem::remove_all(dir);
}
