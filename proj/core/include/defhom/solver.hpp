#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "defhom/operator.hpp"

namespace defhom {

struct SolverOptions {
  double tol = 1e-11;
  std::size_t max_newton = 50;
  std::size_t max_iterations = 100;
  /// Steps larger than this count as divergence.
  double blowup = 1e8;
};

struct SolveReport {
  GridFunction solution;
  bool converged = false;
  std::size_t iterations = 0;
  /// ‖u_{k+1} − u_k‖_∞ per step.
  std::vector<double> residual_history;
  /// q_k = residual_history[k] / residual_history[k-1].
  std::vector<double> contraction_factors;
  /// ‖u − F(u)‖_∞ after each step (Newton) or at the end (frozen iteration).
  std::vector<double> fixed_point_residuals;
  double alpha = 0.0;
  double discrepancy = 0.0;
  double error_vs_u0 = 0.0;
  bool bound_satisfied = false;
  double eps = 0.0;
};

/// Newton's method on u = F₀(u) from `initial` (zero when absent).
SolveReport solve_homogenized(const ProblemInstance& inst, const MeshPtr& mesh,
                              const SolverOptions& opts = {},
                              const std::optional<GridFunction>& initial = std::nullopt);

struct NondegeneracyReport {
  double alpha = 0.0;
  /// α on the once-refined mesh (NaN when the refinement test is skipped).
  double alpha_refined = 0.0;
  bool degenerate = false;
  std::string reason;
};

/// α of I − F′₀(u₀), flagged degenerate below `threshold` or when one mesh
/// doubling shrinks it more than tenfold.
NondegeneracyReport check_nondegeneracy(const ProblemInstance& inst, const GridFunction& u0,
                                        double threshold = 1e-6, bool refine_test = true);

struct SufficientConditionReport {
  bool holds = false;
  /// min over nodes of λ_min(sym ∂_u d(x, u₀(x)))
  double d_floor = 0.0;
  /// max over nodes of ‖∂_u c(x, u₀(x))‖₂
  double c_norm = 0.0;
  /// 2·sqrt(λ_min(sym A₀)·d_floor); c_norm must stay strictly below it.
  double c_bound = 0.0;
};

/// Energy criterion: with p = ‖∂_u c‖, q = λ_min(sym ∂_u d) > 0 and
/// m = λ_min(sym A₀) the linearized form m|v′|² + q|v|² − p|v||v′| is
/// positive definite whenever p < 2·sqrt(m·q).
SufficientConditionReport sufficient_nondegeneracy(const ProblemInstance& inst,
                                                   const GridFunction& u0);

/// Frozen-linearization iteration u ← u + (I − F′_ε(u₀))⁻¹(F_ε(u) − u)
/// starting at u₀ (which must live on a mesh aligned with the ε-scaled
/// coefficient). Throws NoConvergence carrying the step and q_k traces.
SolveReport solve_eps(const ProblemInstance& inst, const GridFunction& u0,
                      const SolverOptions& opts = {});

struct ProbeReport {
  bool unique = false;
  std::size_t restarts = 0;
  std::size_t converged = 0;
  double max_deviation = 0.0;
};

/// Restarts the frozen iteration from u₀ + δv for random v with
/// ‖δv‖_∞ = radius; `unique` when every restart converges to within 1e-8 of
/// `u_star`.
ProbeReport local_uniqueness_probe(const ProblemInstance& inst, const GridFunction& u0,
                                   const GridFunction& u_star, std::size_t perturbations,
                                   double radius, std::uint64_t seed,
                                   const SolverOptions& opts = {});

}  // namespace defhom
