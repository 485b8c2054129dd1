#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "defhom/config.hpp"
#include "defhom/errors.hpp"
#include "defhom/model.hpp"
#include "support.hpp"

using namespace defhom;
using namespace defhom::testing;

namespace {

double ev(const Expr& e, double x, std::initializer_list<double> u) {
  std::vector<double> v(u);
  return e.eval(x, v);
}

}  // namespace

TEST_CASE("parse_expression precedence and structure") {
  auto e = parse_expression("u1^3 - u1", 1);
  CHECK(e.op() == Expr::Op::Sub);
  CHECK(e.node().a.op() == Expr::Op::Pow);
  CHECK(e.node().a.node().exponent == 3);
  CHECK(e.node().b.op() == Expr::Op::Var);
  CHECK(ev(e, 0.0, {2.0}) == 6.0);

  CHECK(ev(parse_expression("sin(2*3.141592653589793*x)", 1), 0.25, {0.0}) == doctest::Approx(1.0));
  CHECK(ev(parse_expression("-2^2", 1), 0, {0}) == -4.0);
  CHECK(ev(parse_expression("8/4/2", 1), 0, {0}) == 1.0);
  CHECK(ev(parse_expression("10-3-2", 1), 0, {0}) == 5.0);
  CHECK(ev(parse_expression("2*(3+4)", 1), 0, {0}) == 14.0);
  CHECK(ev(parse_expression("x^-2", 1), 0.5, {0}) == 4.0);
  CHECK(ev(parse_expression("pi", 1), 0, {0}) == std::numbers::pi);
  CHECK(ev(parse_expression("exp(u2) + tanh(u1)", 2), 0, {0.0, 1.0}) == doctest::Approx(std::exp(1.0)));
  CHECK(ev(parse_expression("1.5e-1*x", 1), 2, {0}) == doctest::Approx(0.3));
}

TEST_CASE("parse errors carry an offset and expected tokens") {
  try {
    parse_expression("u1 +", 1);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
    CHECK_FALSE(e.expected().empty());
  }
  CHECK_THROWS_AS(parse_expression("u2", 1), ParseError);
  CHECK_THROWS_AS(parse_expression("foo(x)", 1), ParseError);
  CHECK_THROWS_AS(parse_expression("(x", 1), ParseError);
  CHECK_THROWS_AS(parse_expression("x^1.5", 1), ParseError);
  CHECK_THROWS_AS(parse_expression("x y", 1), ParseError);
  CHECK_THROWS_AS(parse_expression("", 1), ParseError);
  try {
    parse_expression("x * ", 1);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
  }
}

TEST_CASE("step is x-only with declared breakpoints") {
  auto m = NonlinearModel::parse(1, {"step(x - 0.5)"}, {"0"}, {0.5});
  double u[] = {0.0};
  CHECK(m.eval_c(0.5, u, Side::Right)(0) == 1.0);
  CHECK(m.eval_c(0.5, u, Side::Left)(0) == 0.0);
  CHECK(m.eval_c(0.2, u)(0) == 0.0);
  CHECK_THROWS_AS(NonlinearModel::parse(1, {"step(x - 0.5)"}, {"0"}, {}), ModelError);
  CHECK_THROWS_AS(NonlinearModel::parse(1, {"step(u1)"}, {"0"}, {}), ParseError);
  CHECK_THROWS_AS(NonlinearModel::parse(1, {"step(x*x - 0.25)"}, {"0"}, {0.5}), ParseError);
  CHECK_THROWS(NonlinearModel::parse(2, {"0"}, {"0", "0"}));
}

TEST_CASE("eval_c and eval_d") {
  auto zero = NonlinearModel::parse(1, {"0"}, {"u1"});
  double u03[] = {0.3};
  CHECK(zero.eval_c(0.7, u03)(0) == 0.0);
  CHECK(zero.eval_d(0.7, u03)(0) == 0.3);
  auto cubic = NonlinearModel::parse(1, {"0"}, {"u1^3 - u1 + sin(2*pi*x)"});
  double u2[] = {2.0};
  CHECK(cubic.eval_d(0.25, u2)(0) == doctest::Approx(7.0).epsilon(1e-15));
  auto bad = NonlinearModel::parse(1, {"1/x"}, {"0"});
  CHECK_THROWS_AS(bad.eval_c(0.0, u2), EvalError);
}

TEST_CASE("symbolic Jacobians") {
  auto lin = NonlinearModel::parse(1, {"0"}, {"u1"});
  double u[] = {-4.0};
  CHECK(lin.jac_d(0.1, u)(0, 0) == 1.0);
  CHECK(lin.jac_c(0.1, u)(0, 0) == 0.0);
  auto cubic = NonlinearModel::parse(1, {"0"}, {"u1^3 - u1"});
  double u2[] = {2.0};
  CHECK(cubic.jac_d(0.0, u2)(0, 0) == 11.0);

  auto sys = NonlinearModel::parse(2, {"u1*u2", "sin(u2)"}, {"exp(u1) - x*u2", "u1^2"});
  std::vector<double> p = {0.3, -1.2};
  Matrix jc = sys.jac_c(0.4, p);
  CHECK(jc(0, 0) == doctest::Approx(-1.2));
  CHECK(jc(0, 1) == doctest::Approx(0.3));
  CHECK(jc(1, 0) == 0.0);
  CHECK(jc(1, 1) == doctest::Approx(std::cos(-1.2)));
  Matrix jd = sys.jac_d(0.4, p);
  CHECK(jd(0, 0) == doctest::Approx(std::exp(0.3)));
  CHECK(jd(0, 1) == doctest::Approx(-0.4));
  CHECK(jd(1, 0) == doctest::Approx(0.6));

  SUBCASE("re-differentiation is stable") {
    auto e = parse_expression("u1^3*sin(u1) - x/u1", 1);
    auto d1 = e.diff(1);
    auto d1b = parse_expression(d1.to_string(), 1).diff(1);
    auto d2 = d1.diff(1);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.5, 2.0);
    for (int k = 0; k < 50; ++k) {
      double x = U(rng) / 2, v = U(rng);
      CHECK(ev(d2, x, {v}) == doctest::Approx(ev(d1b, x, {v})).epsilon(1e-13));
    }
  }
}

TEST_CASE("print then reparse evaluates identically") {
  std::vector<std::string> texts = {"u1^3 - u1 + sin(2*pi*x)", "-(x - u1)^2/(1 + x^2)", "tanh(u1)*exp(-x) - 3*u2^-1",
                                    "0.1*u2 + 0.2*x", "2*u2 + 0.3*u1^2 - 6*step(x - 0.5)", "-u1 - -u2"};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> X(0.0, 1.0), U(0.5, 2.0);
  for (const auto& t : texts) {
    auto e = parse_expression(t, 2);
    auto back = parse_expression(e.to_string(), 2);
    for (int k = 0; k < 100; ++k) {
      double x = X(rng);
      std::vector<double> u = {U(rng), U(rng)};
      double a = e.eval(x, u), b = back.eval(x, u);
      CHECK(std::abs(a - b) <= 1e-15 * std::max(1.0, std::abs(a)));
    }
  }
}

TEST_CASE("fd_jacobian_check") {
  CHECK(fd_jacobian_check(NonlinearModel::parse(1, {"2*u1 + x"}, {"u1 - 3"}), 100, 1e-3, 1) <= 1e-12);
  CHECK(fd_jacobian_check(NonlinearModel::parse(1, {"0"}, {"u1^3 - u1"}), 100, 1e-5, 2) <= 1e-8);
  CHECK(fd_jacobian_check(NonlinearModel::parse(1, {"sin(u1)*exp(u1)"}, {"exp(-u1)*cos(3*u1)"}), 100, 1e-5, 3) <= 1e-7);
  for (const char* name : {"cubic", "stiff", "linear", "forcing", "system", "degenerate", "qplus"}) {
    CAPTURE(name);
    auto cfg = shipped(name);
    auto inst = cfg.instance(0.1);
    CHECK(fd_jacobian_check(inst.model, 100, 1e-5, cfg.seed) <= 1e-6);
  }
}
