#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <string>

#include "defhom/coeff.hpp"
#include "defhom/gridfn.hpp"
#include "defhom/model.hpp"

namespace defhom {

/// Everything that defines one boundary value problem
///   ((A(x/ε)+B(x/ε)) u' + c(x,u))' = d(x,u),  u(0) = u(1) = 0.
/// eps == 0 denotes the homogenized problem with A₀ in place of A(·/ε)+B(·/ε).
struct ProblemInstance {
  PiecewiseMatrixField A = PiecewiseMatrixField::constant(Matrix::Identity(1, 1));
  PiecewiseMatrixField B = PiecewiseMatrixField::zero_defect(1);
  NonlinearModel model = NonlinearModel::parse(1, {"0"}, {"0"});
  double eps = 0.0;
  double r = 2.0;
  std::string name = "instance";

  std::size_t dim() const { return model.dim(); }
};

/// A(·/ε)+B(·/ε) on [0, 1], or the constant A₀ when eps == 0.
ScaledCoefficient scaled_coefficient(const ProblemInstance& inst,
                                     std::size_t cell_cap = kDefaultMeshCap);

/// Mesh aligned with the instance's coefficient and the model's x-breakpoints.
MeshPtr instance_mesh(const ProblemInstance& inst, std::size_t n_target,
                      std::size_t cap = kDefaultMeshCap);

/// Checks ellipticity and 𝓜_r membership of B; throws NonElliptic or
/// MembershipViolation.
void validate_instance(const ProblemInstance& inst, const std::string& defect_id = "B");

/// The fixed-point map u ↦ F(u) on a fixed mesh,
///   F(u)(x) = ∫₀ˣ M(y)⁻¹ (γ(u) − c(y,u(y)) + ∫₀ʸ d(z,u(z)) dz) dy,
/// with c(·,u(·)) and d(·,u(·)) replaced by their nodal interpolants (one-sided
/// at x-breakpoints) and all remaining integrals evaluated exactly. γ(u) is the
/// weighted average that makes F(u)(1) = 0:
///   γ(u) = (∫₀¹M⁻¹)⁻¹ ∫₀¹ M⁻¹(y) (c(y,u(y)) − ∫₀ʸd) dy.
/// With M ≡ A₀ (homogenized) this reduces to the plain average of c − ∫d.
class FixedPointMap {
 public:
  /// F_{ε,B} on `mesh` (which must be aligned with the breakpoints of `coef`).
  FixedPointMap(NonlinearModel model, MeshPtr mesh, const ScaledCoefficient& coef);
  /// F₀ with the constant matrix A₀.
  static FixedPointMap homogenized(NonlinearModel model, MeshPtr mesh, const Matrix& A0);

  static FixedPointMap for_eps(const ProblemInstance& inst, MeshPtr mesh);
  static FixedPointMap for_homogenized(const ProblemInstance& inst, MeshPtr mesh);

  bool is_homogenized() const { return homogenized_; }
  std::size_t dim() const { return model_.dim(); }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  const NonlinearModel& model() const { return model_; }
  const IntervalWeights& weights() const { return weights_; }

  Vector gamma(const GridFunction& u) const;
  GridFunction apply(const GridFunction& u) const;

  /// γ′(u₀)v and F′(u₀)v evaluated directly from the integral formula.
  Vector gamma_derivative(const GridFunction& u0, const GridFunction& v) const;
  GridFunction apply_derivative(const GridFunction& u0, const GridFunction& v) const;

  /// Dense matrix of F′(u₀) in the node-major nodal basis, assembled block-row
  /// by block-row from prefix sums (independent of apply_derivative).
  Matrix derivative_matrix(const GridFunction& u0) const;

 private:
  FixedPointMap(NonlinearModel model, MeshPtr mesh, IntervalWeights weights, bool homogenized);

  struct Samples;
  Samples sample_integrands(const GridFunction& u) const;
  Samples sample_linearized(const GridFunction& u0, const GridFunction& v) const;
  Matrix interval_integrals(const Samples& s) const;
  Vector gamma_from(const Matrix& q) const;
  GridFunction apply_from(const Matrix& q, const Vector& gamma) const;

  NonlinearModel model_;
  MeshPtr mesh_;
  IntervalWeights weights_;
  Matrix total_inverse_;  // (∫₀¹M⁻¹)⁻¹
  bool homogenized_;
};

Vector gamma_eps(const ProblemInstance& inst, const GridFunction& u);
Vector gamma_0(const ProblemInstance& inst, const GridFunction& u);
GridFunction apply_F_eps(const ProblemInstance& inst, const GridFunction& u);
GridFunction apply_F0(const ProblemInstance& inst, const GridFunction& u);

/// F′ at u₀ together with an LU factorization of I − F′ and, optionally, the
/// smallest singular value α of I − F′ (Euclidean nodal norm).
class AssembledOperator {
 public:
  AssembledOperator(Matrix fprime, MeshPtr mesh, std::size_t n, bool compute_alpha = true);

  const Matrix& matrix() const { return fprime_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  std::size_t dim() const { return n_; }
  /// NaN when assembled without α.
  double alpha() const { return alpha_; }
  double rcond() const { return lu_.rcond(); }

  /// w with (I − F′) w = rhs.
  GridFunction solve(const GridFunction& rhs) const;
  GridFunction apply(const GridFunction& v) const;

  /// Header: n and N as little-endian uint64, then the (n(N+1))² entries of F′
  /// as row-major float64.
  void dump(const std::filesystem::path& path) const;

 private:
  Matrix fprime_;
  MeshPtr mesh_;
  std::size_t n_;
  Eigen::PartialPivLU<Matrix> lu_;
  double alpha_ = std::numeric_limits<double>::quiet_NaN();
};

/// Throws FactorizationFailure when I − F′ is numerically singular.
AssembledOperator assemble_Fprime(const FixedPointMap& map, const GridFunction& u0,
                                  bool compute_alpha = true);
AssembledOperator assemble_Fprime(const ProblemInstance& inst, const GridFunction& u0,
                                  bool homogenized, bool compute_alpha = true);

/// Smallest singular value of I − F′.
double alpha_estimate(const AssembledOperator& op);

double smallest_singular_value(const Matrix& m);
double largest_singular_value(const Matrix& m);

}  // namespace defhom
