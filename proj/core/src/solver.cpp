#include "defhom/solver.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "defhom/errors.hpp"

namespace defhom {

namespace {

struct Iteration {
  GridFunction u;
  bool converged = false;
  std::vector<double> steps;
  std::vector<double> factors;
  std::string failure;
};

Iteration frozen_iterate(const FixedPointMap& map, const AssembledOperator& op,
                         const GridFunction& start, const SolverOptions& opts) {
  Iteration it;
  it.u = start;
  for (std::size_t k = 0; k < opts.max_iterations; ++k) {
    GridFunction w = op.solve(map.apply(it.u) - it.u);
    double step = sup_norm(w);
    it.u += w;
    if (!it.steps.empty()) it.factors.push_back(step / it.steps.back());
    it.steps.push_back(step);
    if (!std::isfinite(step) || step > opts.blowup) {
      it.failure = fmt::format("iterates diverged at step {} (|du| = {:.3e})", k + 1, step);
      return it;
    }
    if (step <= opts.tol) {
      it.converged = true;
      return it;
    }
  }
  it.failure = fmt::format("no convergence within {} iterations (last |du| = {:.3e})",
                           opts.max_iterations, it.steps.back());
  return it;
}

std::vector<Side> sides_at(const Mesh& m, std::size_t i) {
  if (i == 0) return {Side::Right};
  if (i + 1 == m.node_count()) return {Side::Left};
  return {Side::Left, Side::Right};
}

}  // namespace

SolveReport solve_homogenized(const ProblemInstance& inst, const MeshPtr& mesh,
                              const SolverOptions& opts, const std::optional<GridFunction>& initial) {
  FixedPointMap map = FixedPointMap::for_homogenized(inst, mesh);
  SolveReport rep;
  rep.solution = initial ? *initial : GridFunction(mesh, inst.dim());
  GridFunction& u = rep.solution;
  for (std::size_t k = 0; k < opts.max_newton; ++k) {
    AssembledOperator op = assemble_Fprime(map, u, false);
    GridFunction w = op.solve(map.apply(u) - u);
    double step = sup_norm(w);
    u += w;
    if (!rep.residual_history.empty()) {
      rep.contraction_factors.push_back(step / rep.residual_history.back());
    }
    rep.residual_history.push_back(step);
    rep.iterations = k + 1;
    double res = sup_norm(map.apply(u) - u);
    rep.fixed_point_residuals.push_back(res);
    if (!std::isfinite(res) || step > opts.blowup) {
      throw NoConvergence(fmt::format("homogenized Newton diverged at iteration {}", k + 1),
                          rep.fixed_point_residuals, rep.contraction_factors);
    }
    if (res <= opts.tol) {
      rep.converged = true;
      return rep;
    }
  }
  throw NoConvergence(fmt::format("homogenized Newton: no convergence within {} iterations",
                                  opts.max_newton),
                      rep.fixed_point_residuals, rep.contraction_factors);
}

NondegeneracyReport check_nondegeneracy(const ProblemInstance& inst, const GridFunction& u0,
                                        double threshold, bool refine_test) {
  NondegeneracyReport rep;
  rep.alpha_refined = std::numeric_limits<double>::quiet_NaN();
  try {
    rep.alpha = assemble_Fprime(inst, u0, true).alpha();
  } catch (const FactorizationFailure&) {
    rep.alpha = 0.0;
  }
  if (rep.alpha < threshold) {
    rep.degenerate = true;
    rep.reason = fmt::format("alpha {:.3e} below threshold {:.1e}", rep.alpha, threshold);
    return rep;
  }
  if (!refine_test) return rep;

  auto fine = std::make_shared<const Mesh>(u0.mesh().refine(2));
  try {
    GridFunction start = prolong(u0, 2, fine);
    SolveReport refined = solve_homogenized(inst, fine, {}, start);
    rep.alpha_refined = assemble_Fprime(inst, refined.solution, true).alpha();
  } catch (const FactorizationFailure&) {
    rep.alpha_refined = 0.0;
  } catch (const NoConvergence&) {
    rep.degenerate = true;
    rep.reason = "homogenized solve failed on the refined mesh";
    return rep;
  }
  if (rep.alpha_refined < threshold) {
    rep.degenerate = true;
    rep.reason = fmt::format("alpha {:.3e} on the refined mesh below threshold", rep.alpha_refined);
  } else if (rep.alpha > 10.0 * rep.alpha_refined) {
    rep.degenerate = true;
    rep.reason = fmt::format("alpha shrinks {:.1f}x under mesh doubling", rep.alpha / rep.alpha_refined);
  }
  return rep;
}

SufficientConditionReport sufficient_nondegeneracy(const ProblemInstance& inst,
                                                   const GridFunction& u0) {
  SufficientConditionReport rep;
  const Mesh& m = u0.mesh();
  double floor = std::numeric_limits<double>::infinity();
  double cnorm = 0.0;
  for (std::size_t i = 0; i < m.node_count(); ++i) {
    Vector ui = u0.at(i);
    for (Side side : sides_at(m, i)) {
      floor = std::min(floor, linalg::min_form_eigenvalue(
                                  inst.model.jac_d(m.x(i), linalg::as_span(ui), side)));
      cnorm = std::max(cnorm, linalg::spectral_norm(
                                  inst.model.jac_c(m.x(i), linalg::as_span(ui), side)));
    }
  }
  rep.d_floor = floor;
  rep.c_norm = cnorm;
  double mA0 = linalg::min_form_eigenvalue(homogenized_matrix_A0(inst.A));
  rep.c_bound = floor > 0.0 ? 2.0 * std::sqrt(mA0 * floor) : 0.0;
  rep.holds = floor > 0.0 && cnorm < rep.c_bound;
  return rep;
}

SolveReport solve_eps(const ProblemInstance& inst, const GridFunction& u0,
                      const SolverOptions& opts) {
  FixedPointMap map = FixedPointMap::for_eps(inst, u0.mesh_ptr());
  AssembledOperator op = assemble_Fprime(map, u0, true);

  SolveReport rep;
  rep.eps = inst.eps;
  rep.alpha = op.alpha();
  rep.discrepancy = sup_norm(map.apply(u0) - u0);

  Iteration it = frozen_iterate(map, op, u0, opts);
  if (!it.converged) {
    throw NoConvergence(fmt::format("eps = {}: {}", inst.eps, it.failure), it.steps, it.factors);
  }
  rep.converged = true;
  rep.iterations = it.steps.size();
  rep.residual_history = std::move(it.steps);
  rep.contraction_factors = std::move(it.factors);
  rep.solution = std::move(it.u);
  rep.fixed_point_residuals.push_back(sup_norm(map.apply(rep.solution) - rep.solution));
  rep.error_vs_u0 = sup_norm(rep.solution - u0);
  rep.bound_satisfied = rep.error_vs_u0 <= (2.0 / rep.alpha) * rep.discrepancy;
  return rep;
}

ProbeReport local_uniqueness_probe(const ProblemInstance& inst, const GridFunction& u0,
                                   const GridFunction& u_star, std::size_t perturbations,
                                   double radius, std::uint64_t seed, const SolverOptions& opts) {
  FixedPointMap map = FixedPointMap::for_eps(inst, u0.mesh_ptr());
  AssembledOperator op = assemble_Fprime(map, u0, false);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  ProbeReport rep;
  rep.restarts = perturbations;
  const std::size_t last = u0.node_count() - 1;
  for (std::size_t p = 0; p < perturbations; ++p) {
    GridFunction v(u0.mesh_ptr(), u0.dim());
    for (std::size_t i = 1; i < last; ++i) {
      for (Eigen::Index j = 0; j < v.values().rows(); ++j) v.values()(j, static_cast<Eigen::Index>(i)) = unit(rng);
    }
    double vn = sup_norm(v);
    if (vn > 0.0) v *= radius / vn;
    Iteration it = frozen_iterate(map, op, u0 + v, opts);
    if (!it.converged) continue;
    ++rep.converged;
    rep.max_deviation = std::max(rep.max_deviation, sup_norm(it.u - u_star));
  }
  rep.unique = rep.converged == rep.restarts && rep.max_deviation <= 1e-8;
  return rep;
}

}  // namespace defhom
