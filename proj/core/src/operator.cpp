#include "defhom/operator.hpp"

#include <bit>
#include <cstdint>
#include <fstream>

#include <fmt/format.h>

#include "defhom/errors.hpp"

namespace defhom {

using Eigen::Index;

namespace {

Index idx(std::size_t i) { return static_cast<Index>(i); }

}  // namespace

ScaledCoefficient scaled_coefficient(const ProblemInstance& inst, std::size_t cell_cap) {
  if (inst.eps > 0.0) return ScaledCoefficient::build(inst.A, inst.B, inst.eps, cell_cap);
  return ScaledCoefficient::constant(homogenized_matrix_A0(inst.A));
}

MeshPtr instance_mesh(const ProblemInstance& inst, std::size_t n_target, std::size_t cap) {
  return build_mesh(scaled_coefficient(inst, cap), n_target, inst.model.x_breakpoints(), cap);
}

void validate_instance(const ProblemInstance& inst, const std::string& defect_id) {
  MembershipReport m = check_Mr_membership(inst.A, inst.B, inst.r);
  if (!m.member) throw MembershipViolation(defect_id, m.violated);
  ellipticity(inst.A, inst.B);
}

// Integrand values at both ends of every interval: column i holds the value
// at x_i⁺ (L) and at x_{i+1}⁻ (R).
struct FixedPointMap::Samples {
  Matrix cL, cR, dL, dR;
};

FixedPointMap::FixedPointMap(NonlinearModel model, MeshPtr mesh, IntervalWeights weights,
                             bool homogenized)
    : model_(std::move(model)),
      mesh_(std::move(mesh)),
      weights_(std::move(weights)),
      total_inverse_(linalg::checked_inverse(weights_.total())),
      homogenized_(homogenized) {}

FixedPointMap::FixedPointMap(NonlinearModel model, MeshPtr mesh, const ScaledCoefficient& coef)
    : FixedPointMap(std::move(model), mesh, IntervalWeights(coef, *mesh), false) {}

FixedPointMap FixedPointMap::homogenized(NonlinearModel model, MeshPtr mesh, const Matrix& A0) {
  IntervalWeights w(ScaledCoefficient::constant(A0), *mesh);
  return FixedPointMap(std::move(model), std::move(mesh), std::move(w), true);
}

FixedPointMap FixedPointMap::for_eps(const ProblemInstance& inst, MeshPtr mesh) {
  if (!(inst.eps > 0.0)) throw ConfigError("the oscillatory problem needs eps > 0");
  return FixedPointMap(inst.model, std::move(mesh), ScaledCoefficient::build(inst.A, inst.B, inst.eps));
}

FixedPointMap FixedPointMap::for_homogenized(const ProblemInstance& inst, MeshPtr mesh) {
  return homogenized(inst.model, std::move(mesh), homogenized_matrix_A0(inst.A));
}

FixedPointMap::Samples FixedPointMap::sample_integrands(const GridFunction& u) const {
  const Mesh& m = *mesh_;
  std::size_t n = dim();
  std::size_t N = m.intervals();
  Samples s{Matrix(n, N), Matrix(n, N), Matrix(n, N), Matrix(n, N)};
  for (std::size_t i = 0; i < N; ++i) {
    Vector ul = u.at(i);
    Vector ur = u.at(i + 1);
    s.cL.col(idx(i)) = model_.eval_c(m.x(i), linalg::as_span(ul), Side::Right);
    s.cR.col(idx(i)) = model_.eval_c(m.x(i + 1), linalg::as_span(ur), Side::Left);
    s.dL.col(idx(i)) = model_.eval_d(m.x(i), linalg::as_span(ul), Side::Right);
    s.dR.col(idx(i)) = model_.eval_d(m.x(i + 1), linalg::as_span(ur), Side::Left);
  }
  return s;
}

FixedPointMap::Samples FixedPointMap::sample_linearized(const GridFunction& u0,
                                                        const GridFunction& v) const {
  const Mesh& m = *mesh_;
  std::size_t n = dim();
  std::size_t N = m.intervals();
  Samples s{Matrix(n, N), Matrix(n, N), Matrix(n, N), Matrix(n, N)};
  for (std::size_t i = 0; i < N; ++i) {
    Vector ul = u0.at(i);
    Vector ur = u0.at(i + 1);
    s.cL.col(idx(i)) = model_.jac_c(m.x(i), linalg::as_span(ul), Side::Right) * v.at(i);
    s.cR.col(idx(i)) = model_.jac_c(m.x(i + 1), linalg::as_span(ur), Side::Left) * v.at(i + 1);
    s.dL.col(idx(i)) = model_.jac_d(m.x(i), linalg::as_span(ul), Side::Right) * v.at(i);
    s.dR.col(idx(i)) = model_.jac_d(m.x(i + 1), linalg::as_span(ur), Side::Left) * v.at(i + 1);
  }
  return s;
}

// q_i = ∫_{x_i}^{x_{i+1}} (c(y) − D(y)) dy with D = ∫₀ʸ d, both from the
// linear interpolants; D is quadratic on each interval and integrated exactly.
Matrix FixedPointMap::interval_integrals(const Samples& s) const {
  const Mesh& m = *mesh_;
  std::size_t N = m.intervals();
  Matrix q(dim(), N);
  Vector D = Vector::Zero(idx(dim()));
  for (std::size_t i = 0; i < N; ++i) {
    double h = m.h(i);
    auto cL = s.cL.col(idx(i));
    auto cR = s.cR.col(idx(i));
    auto dL = s.dL.col(idx(i));
    auto dR = s.dR.col(idx(i));
    q.col(idx(i)) = 0.5 * h * (cL + cR) - h * D - h * h * (dL / 3.0 + dR / 6.0);
    D += 0.5 * h * (dL + dR);
  }
  return q;
}

Vector FixedPointMap::gamma_from(const Matrix& q) const {
  if (homogenized_) return q.rowwise().sum();
  Vector acc = Vector::Zero(idx(dim()));
  for (std::size_t i = 0; i < mesh_->intervals(); ++i) acc += weights_.inverse(i) * q.col(idx(i));
  return total_inverse_ * acc;
}

GridFunction FixedPointMap::apply_from(const Matrix& q, const Vector& gamma) const {
  const Mesh& m = *mesh_;
  Matrix r(dim(), m.intervals());
  for (std::size_t i = 0; i < m.intervals(); ++i) r.col(idx(i)) = m.h(i) * gamma - q.col(idx(i));
  return weighted_cumulative_sum(weights_, mesh_, r);
}

Vector FixedPointMap::gamma(const GridFunction& u) const {
  return gamma_from(interval_integrals(sample_integrands(u)));
}

GridFunction FixedPointMap::apply(const GridFunction& u) const {
  Matrix q = interval_integrals(sample_integrands(u));
  return apply_from(q, gamma_from(q));
}

Vector FixedPointMap::gamma_derivative(const GridFunction& u0, const GridFunction& v) const {
  return gamma_from(interval_integrals(sample_linearized(u0, v)));
}

GridFunction FixedPointMap::apply_derivative(const GridFunction& u0, const GridFunction& v) const {
  Matrix q = interval_integrals(sample_linearized(u0, v));
  return apply_from(q, gamma_from(q));
}

Matrix FixedPointMap::derivative_matrix(const GridFunction& u0) const {
  const Mesh& m = *mesh_;
  const std::size_t n = dim();
  const std::size_t N = m.intervals();
  const Index cols = idx(n * (N + 1));

  std::vector<Matrix> PL(N), PR(N), QL(N), QR(N);
  for (std::size_t i = 0; i < N; ++i) {
    Vector ul = u0.at(i);
    Vector ur = u0.at(i + 1);
    PL[i] = model_.jac_c(m.x(i), linalg::as_span(ul), Side::Right);
    PR[i] = model_.jac_c(m.x(i + 1), linalg::as_span(ur), Side::Left);
    QL[i] = model_.jac_d(m.x(i), linalg::as_span(ul), Side::Right);
    QR[i] = model_.jac_d(m.x(i + 1), linalg::as_span(ur), Side::Left);
  }

  // Block row S_i = ∂q_i/∂u, nonzero only in node blocks 0..i+1. Drow holds
  // ∂D(x_i)/∂u and is nonzero in blocks 0..i.
  Matrix Drow = Matrix::Zero(idx(n), cols);
  Matrix S(idx(n), cols);
  auto build_row = [&](std::size_t i) {
    double h = m.h(i);
    Index width = idx(n * (i + 2));
    S.leftCols(width) = -h * Drow.leftCols(width);
    S.block(0, idx(n * i), idx(n), idx(n)) += 0.5 * h * PL[i] - (h * h / 3.0) * QL[i];
    S.block(0, idx(n * (i + 1)), idx(n), idx(n)) += 0.5 * h * PR[i] - (h * h / 6.0) * QR[i];
    Drow.block(0, idx(n * i), idx(n), idx(n)) += 0.5 * h * QL[i];
    Drow.block(0, idx(n * (i + 1)), idx(n), idx(n)) += 0.5 * h * QR[i];
    return width;
  };

  // Pass 1: Γ = ∂γ/∂u.
  Matrix Gamma = Matrix::Zero(idx(n), cols);
  for (std::size_t i = 0; i < N; ++i) {
    Index width = build_row(i);
    if (homogenized_) {
      Gamma.leftCols(width) += S.leftCols(width);
    } else {
      Gamma.leftCols(width) += weights_.inverse(i) * S.leftCols(width);
    }
  }
  if (!homogenized_) Gamma = total_inverse_ * Gamma;

  // Pass 2: block row k+1 of F′ = block row k + M_k⁻¹ (h_k Γ − S_k).
  Drow.setZero();
  Matrix out = Matrix::Zero(cols, cols);
  Matrix row = Matrix::Zero(idx(n), cols);
  for (std::size_t i = 0; i < N; ++i) {
    Index width = build_row(i);
    Matrix incr = m.h(i) * Gamma;
    incr.leftCols(width) -= S.leftCols(width);
    row += weights_.inverse(i) * incr;
    out.block(idx(n * (i + 1)), 0, idx(n), cols) = row;
  }
  return out;
}

Vector gamma_eps(const ProblemInstance& inst, const GridFunction& u) {
  return FixedPointMap::for_eps(inst, u.mesh_ptr()).gamma(u);
}

Vector gamma_0(const ProblemInstance& inst, const GridFunction& u) {
  return FixedPointMap::for_homogenized(inst, u.mesh_ptr()).gamma(u);
}

GridFunction apply_F_eps(const ProblemInstance& inst, const GridFunction& u) {
  return FixedPointMap::for_eps(inst, u.mesh_ptr()).apply(u);
}

GridFunction apply_F0(const ProblemInstance& inst, const GridFunction& u) {
  return FixedPointMap::for_homogenized(inst, u.mesh_ptr()).apply(u);
}

double smallest_singular_value(const Matrix& m) {
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues().minCoeff();
}

double largest_singular_value(const Matrix& m) {
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues().maxCoeff();
}

AssembledOperator::AssembledOperator(Matrix fprime, MeshPtr mesh, std::size_t n, bool compute_alpha)
    : fprime_(std::move(fprime)), mesh_(std::move(mesh)), n_(n) {
  Matrix system = Matrix::Identity(fprime_.rows(), fprime_.cols()) - fprime_;
  lu_.compute(system);
  double rc = lu_.rcond();
  if (!(rc > 1e-14)) {
    throw FactorizationFailure(
        fmt::format("I - F' is numerically singular (rcond {:.3e}); the linearization is degenerate", rc));
  }
  if (compute_alpha) alpha_ = smallest_singular_value(system);
}

GridFunction AssembledOperator::solve(const GridFunction& rhs) const {
  Vector w = lu_.solve(rhs.flat());
  return GridFunction::from_flat(mesh_, n_, w);
}

GridFunction AssembledOperator::apply(const GridFunction& v) const {
  Vector w = fprime_ * v.flat();
  return GridFunction::from_flat(mesh_, n_, w);
}

void AssembledOperator::dump(const std::filesystem::path& path) const {
  static_assert(std::endian::native == std::endian::little, "dump assumes a little-endian host");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot open {} for writing", path.string()));
  std::uint64_t header[2] = {n_, mesh_->intervals()};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = fprime_;
  out.write(reinterpret_cast<const char*>(rm.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(rm.size())));
}

AssembledOperator assemble_Fprime(const FixedPointMap& map, const GridFunction& u0,
                                  bool compute_alpha) {
  return AssembledOperator(map.derivative_matrix(u0), map.mesh_ptr(), map.dim(), compute_alpha);
}

AssembledOperator assemble_Fprime(const ProblemInstance& inst, const GridFunction& u0,
                                  bool homogenized, bool compute_alpha) {
  FixedPointMap map = homogenized ? FixedPointMap::for_homogenized(inst, u0.mesh_ptr())
                                  : FixedPointMap::for_eps(inst, u0.mesh_ptr());
  return assemble_Fprime(map, u0, compute_alpha);
}

double alpha_estimate(const AssembledOperator& op) {
  if (!std::isnan(op.alpha())) return op.alpha();
  const Matrix& f = op.matrix();
  return smallest_singular_value(Matrix::Identity(f.rows(), f.cols()) - f);
}

}  // namespace defhom
