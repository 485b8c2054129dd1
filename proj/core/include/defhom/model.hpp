#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "defhom/expr.hpp"
#include "defhom/linalg.hpp"

namespace defhom {

/// The nonlinearities c(x,u), d(x,u) of the flux form
///   ((A(x/ε)+B(x/ε)) u' + c(x,u))' = d(x,u),
/// with their u-Jacobians obtained by symbolic differentiation.
class NonlinearModel {
 public:
  /// Parses the component strings. Every step() jump location must appear in
  /// `x_breakpoints`; otherwise ModelError.
  static NonlinearModel parse(std::size_t n, const std::vector<std::string>& c,
                              const std::vector<std::string>& d,
                              std::vector<double> x_breakpoints = {});

  NonlinearModel(std::size_t n, std::vector<Expr> c, std::vector<Expr> d,
                 std::vector<double> x_breakpoints);

  std::size_t dim() const { return n_; }
  const std::vector<Expr>& c() const { return c_; }
  const std::vector<Expr>& d() const { return d_; }
  const std::vector<double>& x_breakpoints() const { return x_breakpoints_; }
  /// jac_c_expr()[i*n + j] = ∂c_i/∂u_j
  const std::vector<Expr>& jac_c_expr() const { return jac_c_; }
  const std::vector<Expr>& jac_d_expr() const { return jac_d_; }

  /// True when neither c nor d mentions any u variable.
  bool is_u_independent() const;

  // Evaluation throws EvalError on non-finite results.
  Vector eval_c(double x, std::span<const double> u, Side side = Side::Right) const;
  Vector eval_d(double x, std::span<const double> u, Side side = Side::Right) const;
  Matrix jac_c(double x, std::span<const double> u, Side side = Side::Right) const;
  Matrix jac_d(double x, std::span<const double> u, Side side = Side::Right) const;

 private:
  std::size_t n_;
  std::vector<Expr> c_;
  std::vector<Expr> d_;
  std::vector<double> x_breakpoints_;
  std::vector<Expr> jac_c_;
  std::vector<Expr> jac_d_;
};

/// Worst relative discrepancy between the symbolic Jacobians and central
/// differences with step h over `samples` random points x ∈ [0,1],
/// u ∈ [-2,2]ⁿ. Relative to max(1, |entry|).
double fd_jacobian_check(const NonlinearModel& model, std::size_t samples, double h,
                         std::uint64_t seed);

}  // namespace defhom
