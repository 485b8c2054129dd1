#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "defhom/linalg.hpp"

namespace defhom {

/// Piecewise-constant matrix field on the real line.
///
/// A periodic field stores one period: breakpoints 0 = b_0 < ... < b_K = 1 and
/// K cell matrices, extended 1-periodically. A defect field stores its support
/// [b_0, b_K] and vanishes identically outside it. Point evaluation at a
/// breakpoint returns the right-limit cell value.
class PiecewiseMatrixField {
 public:
  static PiecewiseMatrixField periodic(std::vector<double> breakpoints, std::vector<Matrix> values);
  static PiecewiseMatrixField defect(std::vector<double> breakpoints, std::vector<Matrix> values);
  static PiecewiseMatrixField zero_defect(std::size_t n);
  static PiecewiseMatrixField constant(const Matrix& value);

  std::size_t dim() const { return n_; }
  std::size_t cell_count() const { return values_.size(); }
  bool is_periodic() const { return periodic_; }
  /// True for a defect field without cells.
  bool is_empty() const { return values_.empty(); }

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<Matrix>& values() const { return values_; }
  double cell_length(std::size_t k) const { return breakpoints_[k + 1] - breakpoints_[k]; }

  /// [s_lo, s_hi] for defect fields, [0, 1] for periodic ones.
  double support_lo() const;
  double support_hi() const;

  Matrix eval(double y) const;

  /// Index of the cell containing y (right-limit convention), or -1 when y
  /// lies outside a defect's support.
  std::ptrdiff_t locate(double y) const;

 private:
  PiecewiseMatrixField(std::size_t n, bool periodic, std::vector<double> bps, std::vector<Matrix> vals);

  std::size_t n_ = 0;
  bool periodic_ = false;
  std::vector<double> breakpoints_;
  std::vector<Matrix> values_;
};

Matrix eval_field(const PiecewiseMatrixField& f, double y);

struct EllipticityReport {
  double m_A = 0.0;
  double m_AB = 0.0;
  double sup_inv_A = 0.0;
  double sup_inv_AB = 0.0;
  double norm_B_inf = 0.0;
  double norm_B_1 = 0.0;
};

/// Exact ellipticity constants and defect norms. Throws NonElliptic when
/// m_A <= 0 or m_AB <= 0.
EllipticityReport ellipticity(const PiecewiseMatrixField& A, const PiecewiseMatrixField& B);

struct MembershipReport {
  bool member = false;
  /// Empty when member; otherwise names the violated clause.
  std::string violated;
  double r = 0.0;
  double norm_sum = 0.0;        // ‖B‖_∞ + ‖B‖_1
  double form_lower_bound = 0.0;  // ess inf of (A+B)u·u over unit u
  /// The lower-bound clause as literally stated with a first power of |u|;
  /// the check applies the quadratic |u|²/r form.
  std::string literal_clause;
};

MembershipReport check_Mr_membership(const PiecewiseMatrixField& A, const PiecewiseMatrixField& B,
                                     double r);

/// (∫₀¹ A(y)⁻¹ dy)⁻¹, exact cell-wise.
Matrix homogenized_matrix_A0(const PiecewiseMatrixField& A);

/// The field y ↦ A(y/ε) + B(y/ε) restricted to [0, 1], as a refined partition
/// with cached cell inverses and prefix sums of ∫M⁻¹. Interval queries of the
/// inverse integral cost O(log #cells).
class ScaledCoefficient {
 public:
  /// Refined partition for A(·/ε)+B(·/ε). Throws MeshTooFine when the number
  /// of cells would exceed `cell_cap`.
  static ScaledCoefficient build(const PiecewiseMatrixField& A, const PiecewiseMatrixField& B,
                                 double eps, std::size_t cell_cap = 200000);
  /// Single cell [0, 1] carrying `value` (the homogenized coefficient).
  static ScaledCoefficient constant(const Matrix& value);

  std::size_t dim() const { return n_; }
  std::size_t cell_count() const { return values_.size(); }
  const std::vector<double>& edges() const { return edges_; }
  const Matrix& value(std::size_t k) const { return values_[k]; }
  const Matrix& inverse(std::size_t k) const { return inverses_[k]; }

  /// Cell containing x ∈ [0, 1], right-limit convention (x = 1 maps to the last cell).
  std::size_t locate(double x) const;

  /// ∫_α^β M(y)⁻¹ dy for 0 <= α <= β <= 1.
  Matrix integral_inverse(double alpha, double beta) const;

  /// (∫₀¹ M⁻¹)⁻¹
  Matrix effective_matrix() const;

  /// Interior breakpoints of the partition, strictly inside (0, 1).
  std::vector<double> interior_breakpoints() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> edges_;
  std::vector<Matrix> values_;
  std::vector<Matrix> inverses_;
  std::vector<Matrix> prefix_;  // prefix_[k] = ∫₀^{edges_[k]} M⁻¹
};

/// M_{ε,B} = (∫₀¹ (A(x/ε)+B(x/ε))⁻¹ dx)⁻¹
Matrix effective_matrix_M(const PiecewiseMatrixField& A, const PiecewiseMatrixField& B, double eps);

}  // namespace defhom
