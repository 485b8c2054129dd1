#pragma once

#include <span>

#include <Eigen/Dense>

namespace defhom {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Small dense helpers shared by the coefficient and operator code.
namespace linalg {

template <class Derived>
std::span<const double> as_span(const Eigen::DenseBase<Derived>& v) {
  return {v.derived().data(), static_cast<std::size_t>(v.size())};
}

/// ½(M + Mᵀ)
Matrix sym_part(const Matrix& m);

/// Smallest eigenvalue of the symmetric part; the quadratic form bound of M.
double min_form_eigenvalue(const Matrix& m);

/// Euclidean operator norm (largest singular value).
double spectral_norm(const Matrix& m);

/// Inverse of a small square matrix; throws SingularCell when the reciprocal
/// condition estimate is below `rcond_floor`.
Matrix checked_inverse(const Matrix& m, double rcond_floor = 1e-14);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace linalg
}  // namespace defhom
