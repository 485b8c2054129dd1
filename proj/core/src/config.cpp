#include "defhom/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "defhom/errors.hpp"
#include "json.hpp"

namespace defhom {

using json = nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(fmt::format("{} must be an object", where));
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(fmt::format("unknown key '{}' in {}", key, where));
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(fmt::format("missing key '{}' in {}", key, where));
  return *it;
}

double as_number(const json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError(fmt::format("{} must be a number", what));
  return v.get<double>();
}

std::size_t as_count(const json& v, const std::string& what) {
  if (!v.is_number_unsigned()) throw ConfigError(fmt::format("{} must be a non-negative integer", what));
  return v.get<std::size_t>();
}

std::string as_string(const json& v, const std::string& what) {
  if (!v.is_string()) throw ConfigError(fmt::format("{} must be a string", what));
  return v.get<std::string>();
}

std::vector<double> as_numbers(const json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError(fmt::format("{} must be an array of numbers", what));
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], fmt::format("{}[{}]", what, i)));
  return out;
}

std::vector<std::string> as_strings(const json& v, std::size_t n, const std::string& what) {
  if (!v.is_array()) throw ConfigError(fmt::format("{} must be an array of {} strings", what, n));
  if (v.size() != n) throw ConfigError(fmt::format("{} needs {} entries, got {}", what, n, v.size()));
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_string(v[i], fmt::format("{}[{}]", what, i)));
  return out;
}

// A matrix is a row-major list of n² numbers; a bare number is accepted for n = 1.
Matrix as_matrix(const json& v, std::size_t n, const std::string& what) {
  Matrix m(n, n);
  if (n == 1 && v.is_number()) {
    m(0, 0) = v.get<double>();
    return m;
  }
  std::vector<double> flat = as_numbers(v, what);
  if (flat.size() != n * n) {
    throw ConfigError(fmt::format("{} needs {} entries (row-major), got {}", what, n * n, flat.size()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = flat[i * n + j];
  }
  return m;
}

std::vector<Matrix> as_matrices(const json& v, std::size_t n, const std::string& what) {
  if (!v.is_array()) throw ConfigError(fmt::format("{} must be an array of matrices", what));
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_matrix(v[i], n, fmt::format("{}[{}]", what, i)));
  return out;
}

PiecewiseMatrixField as_field(const json& v, std::size_t n, bool periodic, const std::string& what) {
  if (v.is_null()) {
    if (periodic) throw ConfigError(fmt::format("{} is required", what));
    return PiecewiseMatrixField::zero_defect(n);
  }
  reject_unknown(v, {"breakpoints", "values"}, what);
  std::vector<double> bps = as_numbers(require(v, "breakpoints", what), what + ".breakpoints");
  std::vector<Matrix> vals = as_matrices(require(v, "values", what), n, what + ".values");
  if (!periodic && bps.empty() && vals.empty()) return PiecewiseMatrixField::zero_defect(n);
  try {
    return periodic ? PiecewiseMatrixField::periodic(std::move(bps), std::move(vals))
                    : PiecewiseMatrixField::defect(std::move(bps), std::move(vals));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(fmt::format("{}: {}", what, e.what()));
  }
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

ProblemInstance Config::instance(double eps) const {
  ProblemInstance inst;
  inst.A = A;
  inst.B = B;
  inst.model = NonlinearModel::parse(n, c, d, x_breakpoints);
  inst.eps = eps;
  inst.r = r;
  inst.name = name;
  return inst;
}

Config parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  reject_unknown(doc, {"name", "n", "A", "B", "defects", "c", "d", "x_breakpoints", "r", "epsilons",
                       "mesh", "tolerances", "seed", "output_dir", "averaging_u", "refine", "probe",
                       "averaging_samples", "test_vectors"},
                 "config");
  Config cfg;
  cfg.hash = fnv1a_hex(doc.dump());
  if (doc.contains("name")) cfg.name = as_string(doc["name"], "name");
  cfg.n = as_count(require(doc, "n", "config"), "n");
  if (cfg.n == 0) throw ConfigError("n must be positive");
  const std::size_t n = cfg.n;

  cfg.A = as_field(require(doc, "A", "config"), n, true, "A");
  cfg.B = as_field(doc.contains("B") ? doc["B"] : json(), n, false, "B");
  if (doc.contains("defects")) {
    const json& ds = doc["defects"];
    if (!ds.is_array()) throw ConfigError("defects must be an array");
    for (std::size_t i = 0; i < ds.size(); ++i) {
      std::string where = fmt::format("defects[{}]", i);
      reject_unknown(ds[i], {"id", "breakpoints", "values"}, where);
      json field = {{"breakpoints", require(ds[i], "breakpoints", where)},
                    {"values", require(ds[i], "values", where)}};
      cfg.defects.push_back({as_string(require(ds[i], "id", where), where + ".id"),
                             as_field(field, n, false, where)});
    }
  }
  cfg.c = as_strings(require(doc, "c", "config"), n, "c");
  cfg.d = as_strings(require(doc, "d", "config"), n, "d");
  if (doc.contains("x_breakpoints")) cfg.x_breakpoints = as_numbers(doc["x_breakpoints"], "x_breakpoints");
  if (doc.contains("r")) cfg.r = as_number(doc["r"], "r");
  if (doc.contains("epsilons")) cfg.epsilons = as_numbers(doc["epsilons"], "epsilons");
  for (double e : cfg.epsilons) {
    if (!(e > 0.0)) throw ConfigError("epsilons must be positive");
  }

  if (doc.contains("mesh")) {
    const json& m = doc["mesh"];
    reject_unknown(m, {"n_target", "cap"}, "mesh");
    if (m.contains("n_target")) cfg.study.n_target = as_count(m["n_target"], "mesh.n_target");
    if (m.contains("cap")) cfg.study.mesh_cap = as_count(m["cap"], "mesh.cap");
    if (cfg.study.n_target == 0) throw ConfigError("mesh.n_target must be positive");
  }
  if (doc.contains("tolerances")) {
    const json& t = doc["tolerances"];
    reject_unknown(t, {"solver", "max_iterations", "max_newton", "degeneracy", "fem_residual"}, "tolerances");
    if (t.contains("solver")) cfg.study.solver.tol = as_number(t["solver"], "tolerances.solver");
    if (t.contains("max_iterations")) cfg.study.solver.max_iterations = as_count(t["max_iterations"], "tolerances.max_iterations");
    if (t.contains("max_newton")) cfg.study.solver.max_newton = as_count(t["max_newton"], "tolerances.max_newton");
    if (t.contains("degeneracy")) cfg.degeneracy_threshold = as_number(t["degeneracy"], "tolerances.degeneracy");
    if (t.contains("fem_residual")) cfg.fem.residual_tol = as_number(t["fem_residual"], "tolerances.fem_residual");
  }
  if (doc.contains("seed")) cfg.seed = as_count(doc["seed"], "seed");
  if (doc.contains("output_dir")) cfg.output_dir = as_string(doc["output_dir"], "output_dir");
  if (doc.contains("averaging_u")) cfg.averaging_u = as_strings(doc["averaging_u"], n, "averaging_u");
  if (doc.contains("averaging_samples")) cfg.averaging_samples = as_count(doc["averaging_samples"], "averaging_samples");
  if (doc.contains("test_vectors")) cfg.test_vectors = as_count(doc["test_vectors"], "test_vectors");
  if (doc.contains("refine")) {
    const json& rf = doc["refine"];
    if (!rf.is_array() || rf.empty()) throw ConfigError("refine must be a non-empty array");
    cfg.refine.clear();
    for (std::size_t i = 0; i < rf.size(); ++i) {
      cfg.refine.push_back(as_count(rf[i], fmt::format("refine[{}]", i)));
      if (cfg.refine.back() == 0) throw ConfigError("refine factors must be positive");
    }
  }
  if (doc.contains("probe")) {
    const json& p = doc["probe"];
    reject_unknown(p, {"perturbations", "radius"}, "probe");
    if (p.contains("perturbations")) cfg.probe_perturbations = as_count(p["perturbations"], "probe.perturbations");
    if (p.contains("radius")) cfg.probe_radius = as_number(p["radius"], "probe.radius");
  }

  // Parse the expressions now so malformed input fails before any computation.
  (void)cfg.instance();
  for (const auto& s : cfg.averaging_u) (void)parse_expression(s, 0);
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace defhom
