#pragma once

#include <string>

#include "defhom/config.hpp"

namespace defhom::testing {

inline std::string config_path(const std::string& name) {
  return std::string(DEFHOM_CONFIG_DIR) + "/" + name + ".json";
}

inline Config shipped(const std::string& name) { return load_config(config_path(name)); }

inline PiecewiseMatrixField scalar_periodic(std::vector<double> bps, std::vector<double> vals) {
  std::vector<Matrix> m;
  for (double v : vals) m.push_back(Matrix::Constant(1, 1, v));
  return PiecewiseMatrixField::periodic(std::move(bps), std::move(m));
}

inline PiecewiseMatrixField scalar_defect(std::vector<double> bps, std::vector<double> vals) {
  std::vector<Matrix> m;
  for (double v : vals) m.push_back(Matrix::Constant(1, 1, v));
  return PiecewiseMatrixField::defect(std::move(bps), std::move(m));
}

inline PiecewiseMatrixField two_phase() { return scalar_periodic({0.0, 0.5, 1.0}, {2.0, 1.0}); }

inline ProblemInstance scalar_instance(const std::string& c, const std::string& d,
                                       PiecewiseMatrixField A = scalar_periodic({0.0, 1.0}, {1.0}),
                                       PiecewiseMatrixField B = PiecewiseMatrixField::zero_defect(1),
                                       double eps = 0.0, std::vector<double> x_breakpoints = {}) {
  ProblemInstance inst;
  inst.A = std::move(A);
  inst.B = std::move(B);
  inst.model = NonlinearModel::parse(1, {c}, {d}, std::move(x_breakpoints));
  inst.eps = eps;
  inst.r = 3.0;
  return inst;
}

}  // namespace defhom::testing
