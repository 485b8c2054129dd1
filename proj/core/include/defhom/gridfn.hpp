#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "defhom/coeff.hpp"
#include "defhom/linalg.hpp"

namespace defhom {

inline constexpr std::size_t kDefaultMeshCap = 200000;

/// Strictly increasing nodes 0 = x_0 < ... < x_N = 1, aligned with the
/// breakpoints of the active coefficient (and of the nonlinearities in x).
class Mesh {
 public:
  Mesh(std::vector<double> nodes, std::vector<double> coeff_breakpoints);

  static Mesh uniform(std::size_t intervals);

  std::size_t intervals() const { return nodes_.size() - 1; }
  std::size_t node_count() const { return nodes_.size(); }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& coeff_breakpoints() const { return coeff_breakpoints_; }
  double x(std::size_t i) const { return nodes_[i]; }
  double h(std::size_t i) const { return nodes_[i + 1] - nodes_[i]; }
  double min_spacing() const;
  double max_spacing() const;

  /// Split every interval into `s` equal sub-intervals. Node i of this mesh
  /// becomes node s·i of the result.
  Mesh refine(std::size_t s) const;

 private:
  std::vector<double> nodes_;
  std::vector<double> coeff_breakpoints_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Union of a uniform grid with `n_target` intervals, the breakpoints of the
/// scaled coefficient inside (0, 1) and `extra_breakpoints`; points closer
/// than 1e-14 are merged. Throws MeshTooFine above `cap` nodes.
MeshPtr build_mesh(const ScaledCoefficient& coef, std::size_t n_target,
                   std::span<const double> extra_breakpoints = {},
                   std::size_t cap = kDefaultMeshCap);

MeshPtr build_mesh(double eps, const PiecewiseMatrixField& A, const PiecewiseMatrixField& B,
                   std::size_t n_target, std::span<const double> extra_breakpoints = {},
                   std::size_t cap = kDefaultMeshCap);

/// Vector-valued continuous piecewise-linear function on a mesh. Values are
/// stored column-per-node (n × (N+1)), so the raw buffer is node-major.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(MeshPtr mesh, std::size_t n);
  GridFunction(MeshPtr mesh, Matrix values);

  const Mesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  std::size_t dim() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t node_count() const { return static_cast<std::size_t>(values_.cols()); }

  const Matrix& values() const { return values_; }
  Matrix& values() { return values_; }
  auto at(std::size_t node) const { return values_.col(static_cast<Eigen::Index>(node)); }
  auto at(std::size_t node) { return values_.col(static_cast<Eigen::Index>(node)); }

  /// Node-major flattening, length n·(N+1).
  Vector flat() const;
  static GridFunction from_flat(MeshPtr mesh, std::size_t n, const Vector& flat);

  /// Sample a function of x at the nodes.
  template <class F>
  static GridFunction sample(MeshPtr mesh, std::size_t n, F&& f) {
    GridFunction g(mesh, n);
    for (std::size_t i = 0; i < g.node_count(); ++i) g.at(i) = f(mesh->x(i));
    return g;
  }

  GridFunction& operator+=(const GridFunction& o);
  GridFunction& operator-=(const GridFunction& o);
  GridFunction& operator*=(double s);

 private:
  MeshPtr mesh_;
  Matrix values_;
};

GridFunction operator+(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a, const GridFunction& b);
GridFunction operator*(double s, GridFunction a);

double sup_norm(const GridFunction& u);
double w1inf_seminorm(const GridFunction& u);

/// Linear interpolation of u onto u.mesh().refine(s), sharing `fine` when given.
GridFunction prolong(const GridFunction& u, std::size_t s, MeshPtr fine = nullptr);

/// Values of `fine` at every s-th node, on the coarse mesh `coarse`.
GridFunction restrict_to(const GridFunction& fine, const MeshPtr& coarse, std::size_t s);

/// Exact antiderivative of the piecewise-linear g, result(0) = 0.
GridFunction cumulative_integral(const GridFunction& g);

/// Per-interval inverse coefficient matrices of a scaled coefficient on an
/// aligned mesh, plus the total ∫₀¹M⁻¹.
class IntervalWeights {
 public:
  /// Throws Error when some mesh interval straddles a coefficient breakpoint.
  IntervalWeights(const ScaledCoefficient& coef, const Mesh& mesh);

  std::size_t intervals() const { return inv_.size(); }
  const Matrix& inverse(std::size_t i) const { return inv_[i]; }
  const Matrix& value(std::size_t i) const { return val_[i]; }
  /// ∫₀¹ M⁻¹ accumulated over the mesh intervals.
  const Matrix& total() const { return total_; }

 private:
  std::vector<Matrix> inv_;
  std::vector<Matrix> val_;
  Matrix total_;
};

/// result(x_k) = Σ_{i<k} M_i⁻¹ q_i for per-interval integrals q (n × N).
GridFunction weighted_cumulative_sum(const IntervalWeights& w, const MeshPtr& mesh,
                                     const Matrix& interval_integrals);

/// ∫₀ˣ M(y)⁻¹ g(y) dy at the nodes, exact for piecewise-linear g.
GridFunction weighted_cumulative_integral(const ScaledCoefficient& coef, const GridFunction& g);
GridFunction weighted_cumulative_integral(const PiecewiseMatrixField& A,
                                          const PiecewiseMatrixField& B, double eps,
                                          const GridFunction& g);

}  // namespace defhom
