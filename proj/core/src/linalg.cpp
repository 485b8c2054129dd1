#include "defhom/linalg.hpp"

#include <fmt/format.h>

#include "defhom/errors.hpp"

namespace defhom {

namespace linalg {

Matrix sym_part(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double min_form_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym_part(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

Matrix checked_inverse(const Matrix& m, double rcond_floor) {
  Eigen::PartialPivLU<Matrix> lu(m);
  double rc = lu.rcond();
  if (!(rc > rcond_floor)) {
    throw SingularCell(fmt::format("cell matrix is numerically singular (rcond {:.3e})", rc));
  }
  return lu.inverse();
}

double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace linalg
}  // namespace defhom
