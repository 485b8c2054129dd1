#include "defhom/coeff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "defhom/errors.hpp"
#include "detail.hpp"

namespace defhom {

namespace {

constexpr double kMergeTol = 1e-14;

void validate(const std::vector<double>& bps, const std::vector<Matrix>& vals, std::size_t n) {
  if (!vals.empty() && bps.size() != vals.size() + 1) {
    throw ConfigError(fmt::format("field has {} breakpoints but {} cell values", bps.size(),
                                  vals.size()));
  }
  for (std::size_t k = 0; k + 1 < bps.size(); ++k) {
    if (!(bps[k] < bps[k + 1])) {
      throw ConfigError("field breakpoints must be strictly increasing");
    }
  }
  for (const auto& v : vals) {
    if (static_cast<std::size_t>(v.rows()) != n || static_cast<std::size_t>(v.cols()) != n) {
      throw ConfigError(fmt::format("field cell matrix is {}x{}, expected {}x{}", v.rows(),
                                    v.cols(), n, n));
    }
    if (!v.allFinite()) throw ConfigError("field cell matrix has non-finite entries");
  }
}

struct Cells {
  std::vector<double> edges;
  std::vector<Matrix> values;
};

// Partition of the support of B into cells on which A + B is constant.
Cells defect_cells(const PiecewiseMatrixField& A, const PiecewiseMatrixField& B) {
  Cells out;
  if (B.is_empty()) return out;
  double lo = B.support_lo();
  double hi = B.support_hi();
  std::vector<double> pts = B.breakpoints();
  const auto& ab = A.breakpoints();
  for (double j = std::floor(lo); j <= std::ceil(hi); j += 1.0) {
    for (double b : ab) {
      double y = j + b;
      if (y > lo && y < hi) pts.push_back(y);
    }
  }
  out.edges = detail::merge_points(std::move(pts), kMergeTol);
  for (std::size_t k = 0; k + 1 < out.edges.size(); ++k) {
    double mid = 0.5 * (out.edges[k] + out.edges[k + 1]);
    out.values.push_back(A.eval(mid) + B.eval(mid));
  }
  return out;
}

}  // namespace

PiecewiseMatrixField::PiecewiseMatrixField(std::size_t n, bool periodic, std::vector<double> bps,
                                           std::vector<Matrix> vals)
    : n_(n), periodic_(periodic), breakpoints_(std::move(bps)), values_(std::move(vals)) {}

PiecewiseMatrixField PiecewiseMatrixField::periodic(std::vector<double> breakpoints,
                                                    std::vector<Matrix> values) {
  if (values.empty()) throw ConfigError("periodic field needs at least one cell");
  std::size_t n = static_cast<std::size_t>(values.front().rows());
  validate(breakpoints, values, n);
  if (breakpoints.front() != 0.0 || breakpoints.back() != 1.0) {
    throw ConfigError("periodic field breakpoints must start at 0 and end at 1");
  }
  return PiecewiseMatrixField(n, true, std::move(breakpoints), std::move(values));
}

PiecewiseMatrixField PiecewiseMatrixField::defect(std::vector<double> breakpoints,
                                                  std::vector<Matrix> values) {
  if (values.empty()) throw ConfigError("defect field needs at least one cell");
  std::size_t n = static_cast<std::size_t>(values.front().rows());
  validate(breakpoints, values, n);
  return PiecewiseMatrixField(n, false, std::move(breakpoints), std::move(values));
}

PiecewiseMatrixField PiecewiseMatrixField::zero_defect(std::size_t n) {
  return PiecewiseMatrixField(n, false, {}, {});
}

PiecewiseMatrixField PiecewiseMatrixField::constant(const Matrix& value) {
  return periodic({0.0, 1.0}, {value});
}

double PiecewiseMatrixField::support_lo() const {
  if (periodic_) return 0.0;
  return breakpoints_.empty() ? 0.0 : breakpoints_.front();
}

double PiecewiseMatrixField::support_hi() const {
  if (periodic_) return 1.0;
  return breakpoints_.empty() ? 0.0 : breakpoints_.back();
}

std::ptrdiff_t PiecewiseMatrixField::locate(double y) const {
  if (values_.empty()) return -1;
  if (periodic_) {
    double t = y - std::floor(y);
    if (t >= 1.0) t = 0.0;
    return static_cast<std::ptrdiff_t>(detail::bracket(breakpoints_, t));
  }
  if (y < breakpoints_.front() || y >= breakpoints_.back()) return -1;
  return static_cast<std::ptrdiff_t>(detail::bracket(breakpoints_, y));
}

Matrix PiecewiseMatrixField::eval(double y) const {
  std::ptrdiff_t k = locate(y);
  if (k < 0) return Matrix::Zero(n_, n_);
  return values_[static_cast<std::size_t>(k)];
}

Matrix eval_field(const PiecewiseMatrixField& f, double y) { return f.eval(y); }

EllipticityReport ellipticity(const PiecewiseMatrixField& A, const PiecewiseMatrixField& B) {
  EllipticityReport rep;
  rep.m_A = std::numeric_limits<double>::infinity();
  for (const auto& a : A.values()) rep.m_A = std::min(rep.m_A, linalg::min_form_eigenvalue(a));
  if (!(rep.m_A > 0.0)) {
    throw NonElliptic(fmt::format("periodic coefficient is not elliptic (m_A = {:.6g})", rep.m_A));
  }

  // Outside the defect support A + B = A, so every A cell also bounds A + B.
  rep.m_AB = rep.m_A;
  Cells ab = defect_cells(A, B);
  for (const auto& m : ab.values) rep.m_AB = std::min(rep.m_AB, linalg::min_form_eigenvalue(m));
  if (!(rep.m_AB > 0.0)) {
    throw NonElliptic(
        fmt::format("perturbed coefficient A+B is not elliptic (m_AB = {:.6g})", rep.m_AB));
  }

  for (const auto& a : A.values()) {
    rep.sup_inv_A = std::max(rep.sup_inv_A, linalg::spectral_norm(linalg::checked_inverse(a)));
  }
  rep.sup_inv_AB = rep.sup_inv_A;
  for (const auto& m : ab.values) {
    rep.sup_inv_AB = std::max(rep.sup_inv_AB, linalg::spectral_norm(linalg::checked_inverse(m)));
  }

  for (std::size_t k = 0; k < B.cell_count(); ++k) {
    double nb = linalg::spectral_norm(B.values()[k]);
    rep.norm_B_inf = std::max(rep.norm_B_inf, nb);
    rep.norm_B_1 += B.cell_length(k) * nb;
  }
  return rep;
}

MembershipReport check_Mr_membership(const PiecewiseMatrixField& A, const PiecewiseMatrixField& B,
                                     double r) {
  MembershipReport rep;
  rep.r = r;
  rep.literal_clause = "(A(y)+B(y))u.u >= |u|/r";
  if (!(r > 1.0)) {
    rep.violated = fmt::format("r = {} must exceed 1", r);
    return rep;
  }
  double binf = 0.0;
  double b1 = 0.0;
  for (std::size_t k = 0; k < B.cell_count(); ++k) {
    double nb = linalg::spectral_norm(B.values()[k]);
    binf = std::max(binf, nb);
    b1 += B.cell_length(k) * nb;
  }
  rep.norm_sum = binf + b1;

  double lower = std::numeric_limits<double>::infinity();
  for (const auto& a : A.values()) lower = std::min(lower, linalg::min_form_eigenvalue(a));
  for (const auto& m : defect_cells(A, B).values) {
    lower = std::min(lower, linalg::min_form_eigenvalue(m));
  }
  rep.form_lower_bound = lower;

  if (rep.norm_sum > r) {
    rep.violated = fmt::format("|B|_inf + |B|_1 = {:.6g} exceeds r = {:.6g}", rep.norm_sum, r);
  } else if (lower < 1.0 / r) {
    rep.violated = fmt::format("(A+B)u.u >= |u|^2/r fails: form bound {:.6g} < 1/r = {:.6g}",
                               lower, 1.0 / r);
  } else {
    rep.member = true;
  }
  return rep;
}

Matrix homogenized_matrix_A0(const PiecewiseMatrixField& A) {
  std::size_t n = A.dim();
  Matrix acc = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < A.cell_count(); ++k) {
    acc += A.cell_length(k) * linalg::checked_inverse(A.values()[k]);
  }
  return linalg::checked_inverse(acc);
}

ScaledCoefficient ScaledCoefficient::build(const PiecewiseMatrixField& A,
                                           const PiecewiseMatrixField& B, double eps,
                                           std::size_t cell_cap) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw ConfigError(fmt::format("epsilon must be positive and finite, got {}", eps));
  }
  double periods = std::ceil(1.0 / eps);
  double estimate = (periods + 1.0) * static_cast<double>(A.cell_count());
  if (estimate > static_cast<double>(cell_cap)) {
    throw MeshTooFine(estimate >= 1e18 ? std::numeric_limits<std::size_t>::max()
                                       : static_cast<std::size_t>(estimate),
                      cell_cap);
  }

  std::vector<double> pts{0.0, 1.0};
  const auto& ab = A.breakpoints();
  for (double j = 0.0; j <= periods; j += 1.0) {
    for (double b : ab) {
      double x = eps * (j + b);
      if (x > 0.0 && x < 1.0) pts.push_back(x);
    }
  }
  for (double b : B.breakpoints()) {
    double x = eps * b;
    if (x > 0.0 && x < 1.0) pts.push_back(x);
  }

  ScaledCoefficient sc;
  sc.n_ = A.dim();
  sc.edges_ = detail::merge_points(std::move(pts), kMergeTol);
  std::size_t K = sc.edges_.size() - 1;
  sc.values_.reserve(K);
  sc.inverses_.reserve(K);
  sc.prefix_.reserve(K + 1);
  sc.prefix_.push_back(Matrix::Zero(sc.n_, sc.n_));
  for (std::size_t k = 0; k < K; ++k) {
    double y = 0.5 * (sc.edges_[k] + sc.edges_[k + 1]) / eps;
    Matrix m = A.eval(y) + B.eval(y);
    sc.inverses_.push_back(linalg::checked_inverse(m));
    sc.values_.push_back(std::move(m));
    sc.prefix_.push_back(sc.prefix_.back() + (sc.edges_[k + 1] - sc.edges_[k]) * sc.inverses_.back());
  }
  return sc;
}

ScaledCoefficient ScaledCoefficient::constant(const Matrix& value) {
  ScaledCoefficient sc;
  sc.n_ = static_cast<std::size_t>(value.rows());
  sc.edges_ = {0.0, 1.0};
  sc.values_ = {value};
  sc.inverses_ = {linalg::checked_inverse(value)};
  sc.prefix_ = {Matrix::Zero(sc.n_, sc.n_), sc.inverses_.front()};
  return sc;
}

std::size_t ScaledCoefficient::locate(double x) const { return detail::bracket(edges_, x); }

Matrix ScaledCoefficient::integral_inverse(double alpha, double beta) const {
  auto primitive = [this](double t) {
    std::size_t k = locate(t);
    return Matrix(prefix_[k] + (t - edges_[k]) * inverses_[k]);
  };
  return primitive(beta) - primitive(alpha);
}

Matrix ScaledCoefficient::effective_matrix() const {
  return linalg::checked_inverse(prefix_.back());
}

std::vector<double> ScaledCoefficient::interior_breakpoints() const {
  return std::vector<double>(edges_.begin() + 1, edges_.end() - 1);
}

Matrix effective_matrix_M(const PiecewiseMatrixField& A, const PiecewiseMatrixField& B, double eps) {
  return ScaledCoefficient::build(A, B, eps).effective_matrix();
}

}  // namespace defhom
