#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "defhom/harness.hpp"

namespace defhom {

/// A parsed, validated JSON run configuration. Unknown keys are rejected.
struct Config {
  std::string name = "instance";
  std::size_t n = 1;
  PiecewiseMatrixField A = PiecewiseMatrixField::constant(Matrix::Identity(1, 1));
  PiecewiseMatrixField B = PiecewiseMatrixField::zero_defect(1);
  std::vector<NamedDefect> defects;
  std::vector<std::string> c;
  std::vector<std::string> d;
  std::vector<double> x_breakpoints;
  double r = 2.0;
  std::vector<double> epsilons;
  StudyOptions study;
  double degeneracy_threshold = 1e-6;
  FemOptions fem;
  std::vector<std::size_t> refine = {1, 2, 4};
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::vector<std::string> averaging_u = {"x"};
  std::size_t averaging_samples = 64;
  std::size_t probe_perturbations = 20;
  double probe_radius = 0.05;
  std::size_t test_vectors = 5;

  /// 16 hex digits of FNV-1a over the canonical (key-sorted) JSON text.
  std::string hash;

  ProblemInstance instance(double eps = 0.0) const;
};

/// Throws ConfigError for schema violations and ParseError for malformed
/// expressions.
Config parse_config(const std::string& text);
Config load_config(const std::filesystem::path& path);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace defhom
