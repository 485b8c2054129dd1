#include "defhom/oracle.hpp"

#include <cmath>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <boost/math/quadrature/gauss.hpp>
#include <fmt/format.h>

#include "defhom/errors.hpp"

namespace defhom {

using Eigen::Index;

namespace {

Index idx(std::size_t i) { return static_cast<Index>(i); }

struct EndValues {
  Matrix cL, cR, dL, dR;
};

EndValues end_values(const NonlinearModel& model, const GridFunction& u) {
  const Mesh& m = u.mesh();
  std::size_t n = u.dim();
  std::size_t N = m.intervals();
  EndValues e{Matrix(n, N), Matrix(n, N), Matrix(n, N), Matrix(n, N)};
  for (std::size_t i = 0; i < N; ++i) {
    Vector ul = u.at(i);
    Vector ur = u.at(i + 1);
    e.cL.col(idx(i)) = model.eval_c(m.x(i), linalg::as_span(ul), Side::Right);
    e.cR.col(idx(i)) = model.eval_c(m.x(i + 1), linalg::as_span(ur), Side::Left);
    e.dL.col(idx(i)) = model.eval_d(m.x(i), linalg::as_span(ul), Side::Right);
    e.dR.col(idx(i)) = model.eval_d(m.x(i + 1), linalg::as_span(ur), Side::Left);
  }
  return e;
}

// Column j holds the residual tested against the hat function at node j;
// only interior columns are meaningful.
Matrix residual(const IntervalWeights& w, const EndValues& e, const GridFunction& u, LoadRule rule) {
  const Mesh& m = u.mesh();
  std::size_t N = m.intervals();
  Matrix R = Matrix::Zero(idx(u.dim()), idx(N + 1));
  for (std::size_t i = 0; i < N; ++i) {
    double h = m.h(i);
    Vector flux = w.value(i) * (u.at(i + 1) - u.at(i)) / h + 0.5 * (e.cL.col(idx(i)) + e.cR.col(idx(i)));
    R.col(idx(i)) -= flux;
    R.col(idx(i + 1)) += flux;
    if (rule == LoadRule::Lumped) {
      R.col(idx(i)) += 0.5 * h * e.dL.col(idx(i));
      R.col(idx(i + 1)) += 0.5 * h * e.dR.col(idx(i));
    } else {
      R.col(idx(i)) += h * (e.dL.col(idx(i)) / 3.0 + e.dR.col(idx(i)) / 6.0);
      R.col(idx(i + 1)) += h * (e.dL.col(idx(i)) / 6.0 + e.dR.col(idx(i)) / 3.0);
    }
  }
  return R;
}

double interior_max(const Matrix& R) {
  if (R.cols() <= 2) return 0.0;
  return R.middleCols(1, R.cols() - 2).cwiseAbs().maxCoeff();
}

// Lumped-load Jacobian restricted to interior nodes; unknown k ↔ node k+1.
Eigen::SparseMatrix<double> jacobian(const IntervalWeights& w, const NonlinearModel& model,
                                     const GridFunction& u) {
  const Mesh& m = u.mesh();
  const std::size_t n = u.dim();
  const std::size_t N = m.intervals();
  const std::size_t unknowns = n * (N - 1);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(unknowns * n * 3);

  auto add = [&](std::size_t row_node, std::size_t col_node, const Matrix& blk) {
    if (row_node == 0 || row_node == N || col_node == 0 || col_node == N) return;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        double v = blk(idx(a), idx(b));
        if (v != 0.0) trip.emplace_back(idx((row_node - 1) * n + a), idx((col_node - 1) * n + b), v);
      }
    }
  };

  for (std::size_t i = 0; i < N; ++i) {
    double h = m.h(i);
    Vector ul = u.at(i);
    Vector ur = u.at(i + 1);
    Matrix PL = model.jac_c(m.x(i), linalg::as_span(ul), Side::Right);
    Matrix PR = model.jac_c(m.x(i + 1), linalg::as_span(ur), Side::Left);
    Matrix QL = model.jac_d(m.x(i), linalg::as_span(ul), Side::Right);
    Matrix QR = model.jac_d(m.x(i + 1), linalg::as_span(ur), Side::Left);
    // d flux_i / d u_i and d u_{i+1}
    Matrix f0 = -w.value(i) / h + 0.5 * PL;
    Matrix f1 = w.value(i) / h + 0.5 * PR;
    add(i, i, -f0 + 0.5 * h * QL);
    add(i, i + 1, -f1);
    add(i + 1, i, f0);
    add(i + 1, i + 1, f1 + 0.5 * h * QR);
  }
  Eigen::SparseMatrix<double> J(idx(unknowns), idx(unknowns));
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

}  // namespace

OracleSolution solve_fem(const ProblemInstance& inst, const MeshPtr& base, std::size_t s,
                         const FemOptions& opts, const std::optional<GridFunction>& initial) {
  OracleSolution out;
  out.mesh = std::make_shared<const Mesh>(base->refine(s));
  if (out.mesh->node_count() > kDefaultMeshCap) throw MeshTooFine(out.mesh->node_count(), kDefaultMeshCap);
  IntervalWeights w(scaled_coefficient(inst), *out.mesh);
  const std::size_t n = inst.dim();
  const std::size_t N = out.mesh->intervals();

  GridFunction u = initial ? prolong(*initial, s, out.mesh) : GridFunction(out.mesh, n);
  u.at(0).setZero();
  u.at(N).setZero();
  if (N < 2) {
    out.solution = u;
    return out;
  }

  auto res_of = [&](const GridFunction& v) {
    return residual(w, end_values(inst.model, v), v, LoadRule::Lumped);
  };
  Matrix R = res_of(u);
  double rn = interior_max(R);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  for (std::size_t k = 0; k < opts.max_newton && rn > opts.residual_tol; ++k) {
    Eigen::SparseMatrix<double> J = jacobian(w, inst.model, u);
    lu.compute(J);
    if (lu.info() != Eigen::Success) throw FactorizationFailure("FEM Jacobian is singular");
    Vector rhs = R.middleCols(1, idx(N - 1)).reshaped();
    Vector delta = -lu.solve(rhs);

    // Backtracking on the residual keeps Newton from overshooting far from the solution.
    double t = 1.0;
    GridFunction trial = u;
    Matrix Rt;
    double rt = 0.0;
    for (int b = 0; b < 30; ++b) {
      trial = u;
      trial.values().middleCols(1, idx(N - 1)) += t * delta.reshaped(idx(n), idx(N - 1));
      Rt = res_of(trial);
      rt = interior_max(Rt);
      if (std::isfinite(rt) && rt < rn) break;
      t *= 0.5;
    }
    if (!std::isfinite(rt)) throw NoConvergence("FEM Newton produced non-finite residuals", {rn}, {});
    u = std::move(trial);
    R = std::move(Rt);
    rn = rt;
    out.iterations = k + 1;
  }
  out.newton_residual = rn;
  if (rn > opts.residual_tol) {
    throw NoConvergence(fmt::format("FEM Newton stalled at residual {:.3e}", rn), {rn}, {});
  }
  out.solution = std::move(u);
  return out;
}

GridFunction closed_form_linear(const ProblemInstance& inst, const MeshPtr& mesh) {
  if (!inst.model.is_u_independent()) {
    throw NotLinear("closed form requires c and d independent of u");
  }
  using boost::math::quadrature::gauss;
  const std::size_t n = inst.dim();
  const Mesh& m = *mesh;
  const std::size_t N = m.intervals();
  IntervalWeights w(scaled_coefficient(inst), m);
  Vector zero = Vector::Zero(idx(n));
  auto span0 = linalg::as_span(zero);

  // g_i = ∫_{I_i} (c − D), with D(y) = ∫₀ʸ d.
  Matrix g(idx(n), idx(N));
  Vector D = Vector::Zero(idx(n));
  for (std::size_t i = 0; i < N; ++i) {
    double a = m.x(i);
    double b = m.x(i + 1);
    for (std::size_t comp = 0; comp < n; ++comp) {
      const Expr& ce = inst.model.c()[comp];
      const Expr& de = inst.model.d()[comp];
      double ic = gauss<double, 20>::integrate([&](double y) { return ce.eval(y, span0); }, a, b);
      double id = gauss<double, 20>::integrate([&](double z) { return de.eval(z, span0); }, a, b);
      double iD = gauss<double, 20>::integrate([&](double z) { return (b - z) * de.eval(z, span0); }, a, b);
      g(idx(comp), idx(i)) = ic - (b - a) * D(idx(comp)) - iD;
      D(idx(comp)) += id;
    }
  }
  Vector acc = Vector::Zero(idx(n));
  for (std::size_t i = 0; i < N; ++i) acc += w.inverse(i) * g.col(idx(i));
  Vector gamma = linalg::checked_inverse(w.total()) * acc;

  GridFunction u(mesh, n);
  for (std::size_t i = 0; i < N; ++i) {
    u.at(i + 1) = u.at(i) + w.inverse(i) * (m.h(i) * gamma - g.col(idx(i)));
  }
  return u;
}

double weak_residual(const ProblemInstance& inst, const GridFunction& u, LoadRule rule) {
  IntervalWeights w(scaled_coefficient(inst), u.mesh());
  return interior_max(residual(w, end_values(inst.model, u), u, rule));
}

double curvature_scale(const ProblemInstance& inst, const GridFunction& u) {
  const Mesh& m = u.mesh();
  IntervalWeights w(scaled_coefficient(inst), m);
  EndValues e = end_values(inst.model, u);
  double inv = 0.0;
  double load = 0.0;
  for (std::size_t i = 0; i < m.intervals(); ++i) {
    inv = std::max(inv, linalg::spectral_norm(w.inverse(i)));
    double slope = (e.cR.col(idx(i)) - e.cL.col(idx(i))).norm() / m.h(i);
    double dmax = std::max(e.dL.col(idx(i)).norm(), e.dR.col(idx(i)).norm());
    load = std::max(load, dmax + slope);
  }
  return inv * load;
}

}  // namespace defhom
