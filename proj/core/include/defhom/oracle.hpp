#pragma once

#include <cstddef>
#include <optional>

#include "defhom/operator.hpp"

namespace defhom {

struct OracleSolution {
  MeshPtr mesh;
  GridFunction solution;
  /// max_j |R_j| of the discrete weak residual at the last Newton iterate.
  double newton_residual = 0.0;
  std::size_t iterations = 0;
};

struct FemOptions {
  double residual_tol = 1e-10;
  std::size_t max_newton = 50;
};

/// P1 Galerkin solve of the weak form on `base` refined s-fold, with exact
/// element stiffness for the piecewise-constant coefficient, the flux term c
/// averaged over each element from its end values and the load d by the
/// trapezoid rule. Full Newton with a sparse block-tridiagonal Jacobian.
OracleSolution solve_fem(const ProblemInstance& inst, const MeshPtr& base, std::size_t s = 8,
                         const FemOptions& opts = {},
                         const std::optional<GridFunction>& initial = std::nullopt);

/// u(x) = ∫₀ˣ M⁻¹(γ − c + ∫₀ʸ d) with element-wise Gauss-Legendre quadrature
/// for u-independent c and d. Throws NotLinear when c or d mentions u.
GridFunction closed_form_linear(const ProblemInstance& inst, const MeshPtr& mesh);

enum class LoadRule { Consistent, Lumped };

/// max_j |∫(M u′ + c)φ_j′ + ∫ d φ_j| over interior hat functions of u's mesh,
/// with c and d replaced by their nodal interpolants. Consistent integrates
/// the interpolated load exactly, Lumped uses the trapezoid rule.
double weak_residual(const ProblemInstance& inst, const GridFunction& u,
                     LoadRule rule = LoadRule::Consistent);

/// Proxy for sup|u″|: sup|M⁻¹|·max(|d| + |chord slope of c(·,u(·))|) on u's mesh.
double curvature_scale(const ProblemInstance& inst, const GridFunction& u);

}  // namespace defhom
