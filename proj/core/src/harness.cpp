#include "defhom/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "defhom/errors.hpp"
#include "detail.hpp"

namespace defhom {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ProblemInstance with_eps(const ProblemInstance& inst, double eps) {
  ProblemInstance out = inst;
  out.eps = eps;
  return out;
}

std::vector<double> sorted_epsilons(std::vector<double> eps) {
  for (double e : eps) {
    if (!(e > 0.0) || !std::isfinite(e)) throw ConfigError(fmt::format("invalid epsilon {}", e));
  }
  std::sort(eps.begin(), eps.end(), std::greater<>());
  eps.erase(std::unique(eps.begin(), eps.end()), eps.end());
  return eps;
}

double max_late_factor(const std::vector<double>& q) {
  double worst = 0.0;
  for (std::size_t j = 1; j < q.size(); ++j) worst = std::max(worst, q[j]);
  return worst;
}

}  // namespace

std::size_t worker_count() {
  if (const char* env = std::getenv("DEFECT_HOMOG_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  std::size_t workers = std::min(worker_count(), count);
  std::vector<std::exception_ptr> errors(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y, double floor,
                    std::size_t* used) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > floor) || !(x[i] > 0.0)) continue;
    double lx = std::log(x[i]);
    double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (used) *used = m;
  if (m < 2) return kNaN;
  double mm = static_cast<double>(m);
  double den = mm * sxx - sx * sx;
  if (den == 0.0) return kNaN;
  return (mm * sxy - sx * sy) / den;
}

RateTable rate_study(const ProblemInstance& inst, std::vector<double> epsilons,
                     const StudyOptions& opts, const std::string& defect_id) {
  epsilons = sorted_epsilons(std::move(epsilons));
  if (epsilons.size() < 4) {
    throw InsufficientPoints(fmt::format("rate study needs at least 4 distinct epsilons, got {}",
                                         epsilons.size()));
  }
  validate_instance(inst, defect_id);
  RateTable table;
  table.defect_id = defect_id;
  table.rows.resize(epsilons.size());
  ProblemInstance hom = with_eps(inst, 0.0);

  parallel_for(epsilons.size(), [&](std::size_t i) {
    RateRow& row = table.rows[i];
    row.eps = epsilons[i];
    ProblemInstance ie = with_eps(inst, row.eps);
    MeshPtr mesh = instance_mesh(ie, opts.n_target, opts.mesh_cap);
    row.nodes = mesh->node_count();
    try {
      SolveReport u0 = solve_homogenized(hom, mesh, opts.solver);
      SolveReport rep = solve_eps(ie, u0.solution, opts.solver);
      row.converged = true;
      row.sup_error = rep.error_vs_u0;
      row.discrepancy = rep.discrepancy;
      row.alpha = rep.alpha;
      row.iterations = rep.iterations;
      row.bound_ok = rep.bound_satisfied;
      row.contraction_factors = rep.contraction_factors;
      row.max_late_q = max_late_factor(rep.contraction_factors);
    } catch (const NoConvergence& e) {
      row.failure = e.what();
      row.contraction_factors = e.factors();
    } catch (const FactorizationFailure& e) {
      row.failure = e.what();
    }
  });

  std::vector<double> xs, ys;
  for (const auto& row : table.rows) {
    if (!row.converged) continue;
    xs.push_back(row.eps);
    ys.push_back(row.sup_error);
  }
  table.fitted_slope = loglog_slope(xs, ys, 10.0 * opts.solver.tol, &table.rows_in_fit);
  return table;
}

SweepResult defect_sweep(const ProblemInstance& inst, const std::vector<double>& epsilons,
                         const std::vector<NamedDefect>& defects, const StudyOptions& opts) {
  if (defects.empty()) throw ConfigError("defect sweep needs at least one defect");
  for (const auto& d : defects) {
    MembershipReport m = check_Mr_membership(inst.A, d.B, inst.r);
    if (!m.member) throw MembershipViolation(d.id, m.violated);
  }
  SweepResult out;
  out.eps = sorted_epsilons(epsilons);
  for (const auto& d : defects) {
    ProblemInstance id = inst;
    id.B = d.B;
    out.tables.push_back(rate_study(id, epsilons, opts, d.id));
  }
  for (std::size_t k = 0; k < out.eps.size(); ++k) {
    double hi = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    bool all = true;
    for (const auto& t : out.tables) {
      const RateRow& row = t.rows[k];
      if (!row.converged) {
        all = false;
        continue;
      }
      hi = std::max(hi, row.sup_error);
      lo = std::min(lo, row.sup_error);
    }
    out.max_scaled_error.push_back(hi / out.eps[k]);
    out.spread.push_back(all && lo > 0.0 ? hi / lo : kNaN);
  }
  return out;
}

namespace {

// Running integral of (M⁻¹ − A₀⁻¹)u over the merged partition.
struct AveragingIntegral {
  std::vector<double> pts;
  std::vector<Matrix> weight;  // per piece
  std::vector<Vector> u_at;    // u at pts
  std::vector<Vector> prefix;  // F at pts

  Vector at(double x, const GridFunction& u) const {
    std::size_t k = detail::bracket(pts, x);
    if (k + 1 >= pts.size()) k = pts.size() - 2;
    const Mesh& m = u.mesh();
    std::size_t j = detail::bracket(m.nodes(), x);
    if (j + 1 >= m.node_count()) j = m.intervals() - 1;
    double t = (x - m.x(j)) / m.h(j);
    Vector ux = (1.0 - t) * u.at(j) + t * u.at(j + 1);
    return prefix[k] + weight[k] * ((x - pts[k]) * 0.5 * (u_at[k] + ux));
  }
};

AveragingIntegral build_averaging(const ScaledCoefficient& coef, const Matrix& a0_inv,
                                  const GridFunction& u) {
  AveragingIntegral ai;
  std::vector<double> all = coef.edges();
  all.insert(all.end(), u.mesh().nodes().begin(), u.mesh().nodes().end());
  ai.pts = detail::merge_points(std::move(all), 1e-14);
  ai.pts.front() = 0.0;
  ai.pts.back() = 1.0;
  const Mesh& m = u.mesh();
  ai.u_at.reserve(ai.pts.size());
  for (double x : ai.pts) {
    std::size_t j = detail::bracket(m.nodes(), x);
    if (j + 1 >= m.node_count()) j = m.intervals() - 1;
    double t = std::clamp((x - m.x(j)) / m.h(j), 0.0, 1.0);
    ai.u_at.push_back((1.0 - t) * u.at(j) + t * u.at(j + 1));
  }
  ai.prefix.push_back(Vector::Zero(u.values().rows()));
  for (std::size_t k = 0; k + 1 < ai.pts.size(); ++k) {
    double mid = 0.5 * (ai.pts[k] + ai.pts[k + 1]);
    ai.weight.push_back(coef.inverse(coef.locate(mid)) - a0_inv);
    double h = ai.pts[k + 1] - ai.pts[k];
    ai.prefix.push_back(ai.prefix.back() + ai.weight.back() * (h * 0.5 * (ai.u_at[k] + ai.u_at[k + 1])));
  }
  return ai;
}

}  // namespace

Vector averaging_integral(const PiecewiseMatrixField& A, const PiecewiseMatrixField& B, double eps,
                          const GridFunction& u, double alpha, double beta) {
  Matrix a0_inv = linalg::checked_inverse(homogenized_matrix_A0(A));
  AveragingIntegral ai = build_averaging(ScaledCoefficient::build(A, B, eps), a0_inv, u);
  return ai.at(beta, u) - ai.at(alpha, u);
}

AveragingTable averaging_check(const PiecewiseMatrixField& A, const PiecewiseMatrixField& B,
                               const std::vector<double>& epsilons, const GridFunction& u,
                               std::size_t samples, std::uint64_t seed) {
  AveragingTable table;
  table.seed = seed;
  Matrix a0_inv = linalg::checked_inverse(homogenized_matrix_A0(A));
  double unorm = sup_norm(u) + w1inf_seminorm(u);
  std::vector<double> eps = sorted_epsilons(epsilons);
  table.rows.resize(eps.size());

  parallel_for(eps.size(), [&](std::size_t r) {
    AveragingRow& row = table.rows[r];
    row.eps = eps[r];
    ScaledCoefficient coef = ScaledCoefficient::build(A, B, row.eps);
    AveragingIntegral ai = build_averaging(coef, a0_inv, u);

    auto consider = [&](double a, double b, const Vector& fa, const Vector& fb) {
      double v = (fb - fa).norm();
      if (v > row.value) {
        row.value = v;
        row.worst_alpha = a;
        row.worst_beta = b;
      }
    };
    auto pair = [&](double a, double b) {
      if (a > b) std::swap(a, b);
      consider(a, b, ai.at(a, u), ai.at(b, u));
    };

    std::mt19937_64 rng(seed + r);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t k = 0; k < samples; ++k) pair(unit(rng), unit(rng));
    double e = std::min(row.eps, 1.0);
    pair(0.0, 1.0);
    pair(0.0, e);
    pair(1.0 - e, 1.0);

    const auto& P = ai.pts;
    if (u.dim() == 1) {
      std::size_t imin = 0, imax = 0;
      for (std::size_t k = 1; k < P.size(); ++k) {
        if (ai.prefix[k](0) < ai.prefix[imin](0)) imin = k;
        if (ai.prefix[k](0) > ai.prefix[imax](0)) imax = k;
      }
      consider(P[std::min(imin, imax)], P[std::max(imin, imax)], ai.prefix[imin], ai.prefix[imax]);
    } else {
      for (std::size_t i = 0; i < P.size(); ++i) {
        for (std::size_t j = i + 1; j < P.size(); ++j) consider(P[i], P[j], ai.prefix[i], ai.prefix[j]);
      }
    }
    row.scaled = unorm > 0.0 ? row.value / (row.eps * unorm) : 0.0;
  });

  std::vector<double> xs, ys;
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& row : table.rows) {
    xs.push_back(row.eps);
    ys.push_back(row.value);
    table.gamma_hat = std::max(table.gamma_hat, row.scaled);
    lo = std::min(lo, row.scaled);
  }
  table.slope = loglog_slope(xs, ys, 1e-13);
  table.gamma_spread = lo > 0.0 ? table.gamma_hat / lo : kNaN;
  return table;
}

OperatorDemo operator_convergence_demo(const ProblemInstance& inst, std::vector<double> epsilons,
                                       std::size_t test_vectors, std::uint64_t seed,
                                       const StudyOptions& opts) {
  OperatorDemo demo;
  demo.seed = seed;
  epsilons = sorted_epsilons(std::move(epsilons));
  const std::size_t n = inst.dim();
  constexpr std::size_t kModes = 4;

  // v_t(x)_j = Σ_k a_{tjk} sin(kπx) / k
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> coeffs(test_vectors * n * kModes);
  for (double& c : coeffs) c = normal(rng);
  auto make_v = [&](const MeshPtr& mesh, std::size_t t) {
    return GridFunction::sample(mesh, n, [&](double x) {
      Vector v = Vector::Zero(static_cast<Eigen::Index>(n));
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 1; k <= kModes; ++k) {
          v(static_cast<Eigen::Index>(j)) += coeffs[(t * n + j) * kModes + k - 1] *
                                             std::sin(static_cast<double>(k) * std::numbers::pi * x) /
                                             static_cast<double>(k);
        }
      }
      return v;
    });
  };

  ProblemInstance hom = with_eps(inst, 0.0);
  demo.rows.resize(epsilons.size());
  parallel_for(epsilons.size(), [&](std::size_t r) {
    OperatorDemoRow& row = demo.rows[r];
    row.eps = epsilons[r];
    ProblemInstance ie = with_eps(inst, row.eps);
    MeshPtr mesh = instance_mesh(ie, opts.n_target, opts.mesh_cap);
    GridFunction u0 = solve_homogenized(hom, mesh, opts.solver).solution;
    Matrix diff = FixedPointMap::for_eps(ie, mesh).derivative_matrix(u0) -
                  FixedPointMap::for_homogenized(hom, mesh).derivative_matrix(u0);
    for (std::size_t t = 0; t < test_vectors; ++t) {
      Vector w = diff * make_v(mesh, t).flat();
      row.vector_norms.push_back(sup_norm(GridFunction::from_flat(mesh, n, w)));
    }
    row.spectral_norm = largest_singular_value(diff);
    row.inf_norm = diff.cwiseAbs().rowwise().sum().maxCoeff();
  });

  std::vector<double> xs;
  for (const auto& row : demo.rows) xs.push_back(row.eps);
  for (std::size_t t = 0; t < test_vectors; ++t) {
    std::vector<double> ys;
    for (const auto& row : demo.rows) ys.push_back(row.vector_norms[t]);
    demo.vector_slopes.push_back(loglog_slope(xs, ys, 1e-14));
  }
  std::vector<double> sp, in;
  for (const auto& row : demo.rows) {
    sp.push_back(row.spectral_norm);
    in.push_back(row.inf_norm);
  }
  demo.spectral_slope = loglog_slope(xs, sp, 1e-14);
  demo.inf_slope = loglog_slope(xs, in, 1e-14);
  return demo;
}

std::vector<OracleCompareRow> oracle_compare(const ProblemInstance& inst,
                                             const std::vector<std::size_t>& factors,
                                             const StudyOptions& opts) {
  if (!(inst.eps > 0.0)) throw ConfigError("oracle comparison needs eps > 0");
  ProblemInstance hom = with_eps(inst, 0.0);
  MeshPtr base = instance_mesh(inst, opts.n_target, opts.mesh_cap);
  GridFunction base_sol =
      solve_eps(inst, solve_homogenized(hom, base, opts.solver).solution, opts.solver).solution;

  std::vector<OracleCompareRow> rows(factors.size());
  parallel_for(factors.size(), [&](std::size_t r) {
    OracleCompareRow& row = rows[r];
    row.s = factors[r];
    auto fine = std::make_shared<const Mesh>(base->refine(row.s));
    if (fine->node_count() > opts.mesh_cap) throw MeshTooFine(fine->node_count(), opts.mesh_cap);
    GridFunction u0 = solve_homogenized(hom, fine, opts.solver).solution;
    GridFunction sol = solve_eps(inst, u0, opts.solver).solution;
    OracleSolution fem = solve_fem(inst, fine, 1);
    row.h = fine->max_spacing();
    row.fem_residual = fem.newton_residual;
    GridFunction fem_base = restrict_to(fem.solution, base, row.s);
    row.matched_diff = sup_norm(restrict_to(sol, base, row.s) - fem_base);
    row.base_diff = sup_norm(base_sol - fem_base);
    row.scale = curvature_scale(inst, sol);
    row.tolerance = 5.0 * row.h * row.h * row.scale;
  });
  return rows;
}

}  // namespace defhom
