#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "defhom/oracle.hpp"
#include "defhom/solver.hpp"

namespace defhom {

/// Worker count from DEFECT_HOMOG_THREADS, else the hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, count) on up to worker_count() threads. The
/// first exception (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

struct StudyOptions {
  std::size_t n_target = 512;
  std::size_t mesh_cap = kDefaultMeshCap;
  SolverOptions solver;
};

struct RateRow {
  double eps = 0.0;
  bool converged = false;
  double sup_error = 0.0;
  double discrepancy = 0.0;
  double alpha = 0.0;
  std::size_t iterations = 0;
  bool bound_ok = false;
  /// Largest q_k with k ≥ 3 (0 when fewer steps were taken).
  double max_late_q = 0.0;
  std::size_t nodes = 0;
  std::string failure;
  std::vector<double> contraction_factors;
};

struct RateTable {
  std::string defect_id;
  std::vector<RateRow> rows;
  /// NaN when fewer than two rows sit above the floor.
  double fitted_slope = 0.0;
  std::size_t rows_in_fit = 0;
};

/// Least-squares slope of log y against log x over the pairs with y > floor.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y, double floor,
                    std::size_t* used = nullptr);

/// ‖u_{ε,B} − u₀‖_∞ per ε, with u₀ solved on the same ε-aligned mesh. Needs at
/// least four distinct epsilons (InsufficientPoints otherwise); rows are sorted
/// by decreasing ε. Solver failures mark the row instead of aborting.
RateTable rate_study(const ProblemInstance& inst, std::vector<double> epsilons,
                     const StudyOptions& opts = {}, const std::string& defect_id = "B");

struct NamedDefect {
  std::string id;
  PiecewiseMatrixField B;
};

struct SweepResult {
  std::vector<RateTable> tables;
  std::vector<double> eps;
  /// max over defects of sup_error/ε, per ε.
  std::vector<double> max_scaled_error;
  /// max/min of sup_error across defects, per ε.
  std::vector<double> spread;
};

/// One rate study per defect, all sharing inst.A, the model and inst.r.
/// Throws MembershipViolation naming the first defect outside 𝓜_r.
SweepResult defect_sweep(const ProblemInstance& inst, const std::vector<double>& epsilons,
                         const std::vector<NamedDefect>& defects, const StudyOptions& opts = {});

struct AveragingRow {
  double eps = 0.0;
  /// sup over the tested (α,β) of |∫_α^β (M⁻¹ − A₀⁻¹) u|.
  double value = 0.0;
  /// value / (ε(‖u‖_∞ + ‖u′‖_∞))
  double scaled = 0.0;
  double worst_alpha = 0.0;
  double worst_beta = 0.0;
};

struct AveragingTable {
  std::vector<AveragingRow> rows;
  double slope = 0.0;
  double gamma_hat = 0.0;
  /// max/min of `scaled` over the rows.
  double gamma_spread = 0.0;
  std::uint64_t seed = 0;
};

/// ∫_α^β (M⁻¹ − A₀⁻¹) u for one pair, exact for piecewise-linear u.
Vector averaging_integral(const PiecewiseMatrixField& A, const PiecewiseMatrixField& B, double eps,
                          const GridFunction& u, double alpha, double beta);

/// Interval integrals are exact (prefix sums over the merged partition of the
/// coefficient cells and u's mesh). Pairs: `samples` uniform ones, the corners
/// (0,1), (0,ε), (1−ε,1), and every pair of partition points.
AveragingTable averaging_check(const PiecewiseMatrixField& A, const PiecewiseMatrixField& B,
                               const std::vector<double>& epsilons, const GridFunction& u,
                               std::size_t samples, std::uint64_t seed);

struct OperatorDemoRow {
  double eps = 0.0;
  std::vector<double> vector_norms;
  double spectral_norm = 0.0;
  /// Induced ∞-norm (max row sum).
  double inf_norm = 0.0;
};

struct OperatorDemo {
  std::vector<OperatorDemoRow> rows;
  std::vector<double> vector_slopes;
  double spectral_slope = 0.0;
  double inf_slope = 0.0;
  std::uint64_t seed = 0;
};

/// ‖(F′_{ε,B}(u₀) − F′₀(u₀))v‖_∞ for fixed smooth random v (sine series with
/// seeded coefficients) together with the operator norms of the difference.
OperatorDemo operator_convergence_demo(const ProblemInstance& inst, std::vector<double> epsilons,
                                       std::size_t test_vectors, std::uint64_t seed,
                                       const StudyOptions& opts = {});

struct OracleCompareRow {
  std::size_t s = 1;
  double h = 0.0;
  /// Both solvers on the s-fold refined mesh, compared at the base nodes.
  double matched_diff = 0.0;
  /// The ε-solver on the base mesh against the FEM on the refined mesh.
  double base_diff = 0.0;
  double scale = 0.0;
  double tolerance = 0.0;
  double fem_residual = 0.0;
};

/// Solver/oracle agreement for the refinements in `factors` on the ε-mesh.
/// tolerance = 5·h²·scale with h the largest refined spacing.
std::vector<OracleCompareRow> oracle_compare(const ProblemInstance& inst,
                                             const std::vector<std::size_t>& factors,
                                             const StudyOptions& opts = {});

}  // namespace defhom
