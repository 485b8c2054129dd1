#include "defhom/gridfn.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "defhom/errors.hpp"
#include "detail.hpp"

namespace defhom {

namespace {
constexpr double kNodeTol = 1e-14;
}

Mesh::Mesh(std::vector<double> nodes, std::vector<double> coeff_breakpoints)
    : nodes_(std::move(nodes)), coeff_breakpoints_(std::move(coeff_breakpoints)) {
  if (nodes_.size() < 2 || nodes_.front() != 0.0 || nodes_.back() != 1.0) {
    throw Error("mesh nodes must run from 0 to 1");
  }
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    if (!(nodes_[i] < nodes_[i + 1])) throw Error("mesh nodes must be strictly increasing");
  }
  std::sort(coeff_breakpoints_.begin(), coeff_breakpoints_.end());
  for (double b : coeff_breakpoints_) {
    if (b <= 0.0 || b >= 1.0) continue;
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), b - kNodeTol);
    if (it == nodes_.end() || std::abs(*it - b) > kNodeTol) {
      throw Error(fmt::format("mesh is not aligned with coefficient breakpoint {}", b));
    }
  }
}

Mesh Mesh::uniform(std::size_t intervals) {
  std::vector<double> x(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i) {
    x[i] = static_cast<double>(i) / static_cast<double>(intervals);
  }
  x.back() = 1.0;
  return Mesh(std::move(x), {});
}

double Mesh::min_spacing() const {
  double m = 1.0;
  for (std::size_t i = 0; i < intervals(); ++i) m = std::min(m, h(i));
  return m;
}

double Mesh::max_spacing() const {
  double m = 0.0;
  for (std::size_t i = 0; i < intervals(); ++i) m = std::max(m, h(i));
  return m;
}

Mesh Mesh::refine(std::size_t s) const {
  if (s == 0) throw Error("refinement factor must be positive");
  std::vector<double> x;
  x.reserve(intervals() * s + 1);
  for (std::size_t i = 0; i < intervals(); ++i) {
    double a = nodes_[i];
    double b = nodes_[i + 1];
    x.push_back(a);
    for (std::size_t j = 1; j < s; ++j) {
      double t = static_cast<double>(j) / static_cast<double>(s);
      x.push_back(a + t * (b - a));
    }
  }
  x.push_back(1.0);
  return Mesh(std::move(x), coeff_breakpoints_);
}

MeshPtr build_mesh(const ScaledCoefficient& coef, std::size_t n_target,
                   std::span<const double> extra_breakpoints, std::size_t cap) {
  if (n_target == 0) throw ConfigError("mesh n_target must be positive");
  std::vector<double> bps = coef.interior_breakpoints();
  for (double b : extra_breakpoints) {
    if (b > 0.0 && b < 1.0) bps.push_back(b);
  }
  std::size_t estimate = n_target + 1 + bps.size();
  if (n_target + 1 > cap) throw MeshTooFine(estimate, cap);

  std::vector<double> pts;
  pts.reserve(estimate);
  for (std::size_t i = 0; i <= n_target; ++i) {
    pts.push_back(static_cast<double>(i) / static_cast<double>(n_target));
  }
  pts.insert(pts.end(), bps.begin(), bps.end());
  std::vector<double> nodes = detail::merge_points(std::move(pts), kNodeTol);
  nodes.front() = 0.0;
  nodes.back() = 1.0;
  if (nodes.size() > cap) throw MeshTooFine(nodes.size(), cap);

  // Merging may have dropped a breakpoint in favour of a grid node within
  // tolerance; snap the recorded breakpoints to the surviving nodes.
  std::vector<double> aligned;
  aligned.reserve(bps.size());
  for (double b : bps) {
    aligned.push_back(nodes[detail::bracket(nodes, b + kNodeTol)]);
  }
  aligned = detail::merge_points(std::move(aligned), 0.0);
  return std::make_shared<const Mesh>(std::move(nodes), std::move(aligned));
}

MeshPtr build_mesh(double eps, const PiecewiseMatrixField& A, const PiecewiseMatrixField& B,
                   std::size_t n_target, std::span<const double> extra_breakpoints,
                   std::size_t cap) {
  ScaledCoefficient coef = ScaledCoefficient::build(A, B, eps, cap);
  return build_mesh(coef, n_target, extra_breakpoints, cap);
}

GridFunction::GridFunction(MeshPtr mesh, std::size_t n)
    : mesh_(std::move(mesh)), values_(Matrix::Zero(n, mesh_->node_count())) {}

GridFunction::GridFunction(MeshPtr mesh, Matrix values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
  if (static_cast<std::size_t>(values_.cols()) != mesh_->node_count()) {
    throw Error("grid function value count does not match mesh");
  }
}

Vector GridFunction::flat() const {
  return Eigen::Map<const Vector>(values_.data(), values_.size());
}

GridFunction GridFunction::from_flat(MeshPtr mesh, std::size_t n, const Vector& flat) {
  Matrix v = Eigen::Map<const Matrix>(flat.data(), static_cast<Eigen::Index>(n),
                                      static_cast<Eigen::Index>(flat.size() / n));
  return GridFunction(std::move(mesh), std::move(v));
}

GridFunction& GridFunction::operator+=(const GridFunction& o) {
  values_ += o.values_;
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& o) {
  values_ -= o.values_;
  return *this;
}

GridFunction& GridFunction::operator*=(double s) {
  values_ *= s;
  return *this;
}

GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
GridFunction operator*(double s, GridFunction a) { return a *= s; }

double sup_norm(const GridFunction& u) {
  if (u.values().size() == 0) return 0.0;
  return u.values().colwise().norm().maxCoeff();
}

double w1inf_seminorm(const GridFunction& u) {
  const Mesh& m = u.mesh();
  double s = 0.0;
  for (std::size_t i = 0; i < m.intervals(); ++i) {
    s = std::max(s, (u.at(i + 1) - u.at(i)).norm() / m.h(i));
  }
  return s;
}

GridFunction prolong(const GridFunction& u, std::size_t s, MeshPtr fine) {
  if (!fine) fine = std::make_shared<const Mesh>(u.mesh().refine(s));
  if (fine->intervals() != s * u.mesh().intervals()) {
    throw Error("prolong: target mesh is not an s-fold refinement");
  }
  GridFunction out(fine, u.dim());
  for (std::size_t i = 0; i < u.mesh().intervals(); ++i) {
    double x0 = u.mesh().x(i);
    double h = u.mesh().h(i);
    for (std::size_t k = 0; k < s; ++k) {
      double t = (fine->x(s * i + k) - x0) / h;
      out.at(s * i + k) = (1.0 - t) * u.at(i) + t * u.at(i + 1);
    }
  }
  out.at(fine->intervals()) = u.at(u.mesh().intervals());
  return out;
}

GridFunction restrict_to(const GridFunction& fine, const MeshPtr& coarse, std::size_t s) {
  if (fine.mesh().intervals() != s * coarse->intervals()) {
    throw Error("restrict_to: meshes are not related by the refinement factor");
  }
  GridFunction out(coarse, fine.dim());
  for (std::size_t i = 0; i < coarse->node_count(); ++i) out.at(i) = fine.at(s * i);
  return out;
}

GridFunction cumulative_integral(const GridFunction& g) {
  const Mesh& m = g.mesh();
  GridFunction out(g.mesh_ptr(), g.dim());
  for (std::size_t i = 0; i < m.intervals(); ++i) {
    out.at(i + 1) = out.at(i) + 0.5 * m.h(i) * (g.at(i) + g.at(i + 1));
  }
  return out;
}

IntervalWeights::IntervalWeights(const ScaledCoefficient& coef, const Mesh& mesh) {
  const auto& edges = coef.edges();
  std::size_t n = coef.dim();
  total_ = Matrix::Zero(n, n);
  inv_.reserve(mesh.intervals());
  val_.reserve(mesh.intervals());
  for (std::size_t i = 0; i < mesh.intervals(); ++i) {
    double a = mesh.x(i);
    double b = mesh.x(i + 1);
    std::size_t k = coef.locate(0.5 * (a + b));
    if (a < edges[k] - kNodeTol || b > edges[k + 1] + kNodeTol) {
      throw Error(fmt::format("mesh interval [{}, {}] straddles a coefficient breakpoint", a, b));
    }
    inv_.push_back(coef.inverse(k));
    val_.push_back(coef.value(k));
    total_ += (b - a) * inv_.back();
  }
}

GridFunction weighted_cumulative_sum(const IntervalWeights& w, const MeshPtr& mesh,
                                     const Matrix& interval_integrals) {
  std::size_t n = static_cast<std::size_t>(interval_integrals.rows());
  GridFunction out(mesh, n);
  for (std::size_t i = 0; i < mesh->intervals(); ++i) {
    out.at(i + 1) = out.at(i) + w.inverse(i) * interval_integrals.col(static_cast<Eigen::Index>(i));
  }
  return out;
}

GridFunction weighted_cumulative_integral(const ScaledCoefficient& coef, const GridFunction& g) {
  const Mesh& m = g.mesh();
  IntervalWeights w(coef, m);
  Matrix q(g.dim(), m.intervals());
  for (std::size_t i = 0; i < m.intervals(); ++i) {
    q.col(static_cast<Eigen::Index>(i)) = 0.5 * m.h(i) * (g.at(i) + g.at(i + 1));
  }
  return weighted_cumulative_sum(w, g.mesh_ptr(), q);
}

GridFunction weighted_cumulative_integral(const PiecewiseMatrixField& A,
                                          const PiecewiseMatrixField& B, double eps,
                                          const GridFunction& g) {
  return weighted_cumulative_integral(ScaledCoefficient::build(A, B, eps), g);
}

}  // namespace defhom
