#include "defhom/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "defhom/errors.hpp"

namespace defhom {

namespace {

void collect_step_roots(const Expr& e, std::vector<double>& out) {
  if (e.is_number()) return;
  const auto& n = e.node();
  if (n.op == Expr::Op::Var) return;
  if (n.op == Expr::Op::Step) {
    double at0 = n.a.eval(0.0, {});
    out.push_back(-at0 / n.b.number_value());
    return;
  }
  collect_step_roots(n.a, out);
  collect_step_roots(n.b, out);
}

Vector eval_components(const std::vector<Expr>& es, double x, std::span<const double> u, Side side,
                       const char* what) {
  Vector out(static_cast<Eigen::Index>(es.size()));
  for (std::size_t i = 0; i < es.size(); ++i) {
    double v = es[i].eval(x, u, side);
    if (!std::isfinite(v)) {
      throw EvalError(fmt::format("{}{} is not finite at x = {}", what, i + 1, x));
    }
    out(static_cast<Eigen::Index>(i)) = v;
  }
  return out;
}

Matrix eval_jacobian(const std::vector<Expr>& es, std::size_t n, double x,
                     std::span<const double> u, Side side, const char* what) {
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double v = es[i * n + j].eval(x, u, side);
      if (!std::isfinite(v)) {
        throw EvalError(fmt::format("d{}{}/du{} is not finite at x = {}", what, i + 1, j + 1, x));
      }
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return out;
}

}  // namespace

NonlinearModel NonlinearModel::parse(std::size_t n, const std::vector<std::string>& c,
                                     const std::vector<std::string>& d,
                                     std::vector<double> x_breakpoints) {
  if (c.size() != n || d.size() != n) {
    throw ConfigError(fmt::format("model needs {} c and {} d components, got {} and {}", n, n,
                                  c.size(), d.size()));
  }
  std::vector<Expr> ce;
  std::vector<Expr> de;
  for (const auto& s : c) ce.push_back(parse_expression(s, n));
  for (const auto& s : d) de.push_back(parse_expression(s, n));
  return NonlinearModel(n, std::move(ce), std::move(de), std::move(x_breakpoints));
}

NonlinearModel::NonlinearModel(std::size_t n, std::vector<Expr> c, std::vector<Expr> d,
                               std::vector<double> x_breakpoints)
    : n_(n), c_(std::move(c)), d_(std::move(d)), x_breakpoints_(std::move(x_breakpoints)) {
  std::sort(x_breakpoints_.begin(), x_breakpoints_.end());
  std::vector<double> roots;
  for (const auto& e : c_) collect_step_roots(e, roots);
  for (const auto& e : d_) collect_step_roots(e, roots);
  for (double r : roots) {
    if (r <= 0.0 || r >= 1.0) continue;
    bool declared = std::any_of(x_breakpoints_.begin(), x_breakpoints_.end(),
                                [r](double b) { return std::abs(b - r) <= 1e-12; });
    if (!declared) {
      throw ModelError(fmt::format("step() jumps at x = {} which is not a declared x_breakpoint", r));
    }
  }
  jac_c_.reserve(n * n);
  jac_d_.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      jac_c_.push_back(c_[i].diff(j + 1));
      jac_d_.push_back(d_[i].diff(j + 1));
    }
  }
}

bool NonlinearModel::is_u_independent() const {
  auto dep = [](const Expr& e) { return e.depends_on_u(); };
  return std::none_of(c_.begin(), c_.end(), dep) && std::none_of(d_.begin(), d_.end(), dep);
}

Vector NonlinearModel::eval_c(double x, std::span<const double> u, Side side) const {
  return eval_components(c_, x, u, side, "c");
}

Vector NonlinearModel::eval_d(double x, std::span<const double> u, Side side) const {
  return eval_components(d_, x, u, side, "d");
}

Matrix NonlinearModel::jac_c(double x, std::span<const double> u, Side side) const {
  return eval_jacobian(jac_c_, n_, x, u, side, "c");
}

Matrix NonlinearModel::jac_d(double x, std::span<const double> u, Side side) const {
  return eval_jacobian(jac_d_, n_, x, u, side, "d");
}

double fd_jacobian_check(const NonlinearModel& model, std::size_t samples, double h,
                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, 1.0);
  std::uniform_real_distribution<double> uu(-2.0, 2.0);
  std::size_t n = model.dim();
  double worst = 0.0;
  Vector u(static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < samples; ++s) {
    double x = ux(rng);
    for (std::size_t i = 0; i < n; ++i) u(static_cast<Eigen::Index>(i)) = uu(rng);
    Matrix jc = model.jac_c(x, linalg::as_span(u));
    Matrix jd = model.jac_d(x, linalg::as_span(u));
    for (std::size_t j = 0; j < n; ++j) {
      Vector up = u;
      Vector um = u;
      up(static_cast<Eigen::Index>(j)) += h;
      um(static_cast<Eigen::Index>(j)) -= h;
      Vector fdc = (model.eval_c(x, linalg::as_span(up)) - model.eval_c(x, linalg::as_span(um))) / (2.0 * h);
      Vector fdd = (model.eval_d(x, linalg::as_span(up)) - model.eval_d(x, linalg::as_span(um))) / (2.0 * h);
      for (std::size_t i = 0; i < n; ++i) {
        auto ii = static_cast<Eigen::Index>(i);
        auto jj = static_cast<Eigen::Index>(j);
        worst = std::max(worst, std::abs(fdc(ii) - jc(ii, jj)) / std::max(1.0, std::abs(jc(ii, jj))));
        worst = std::max(worst, std::abs(fdd(ii) - jd(ii, jj)) / std::max(1.0, std::abs(jd(ii, jj))));
      }
    }
  }
  return worst;
}

}  // namespace defhom
