#include <cmath>

#include "doctest.h"
#include "defhom/errors.hpp"
#include "defhom/oracle.hpp"
#include "defhom/solver.hpp"
#include "support.hpp"

using namespace defhom;
using namespace defhom::testing;

namespace {

double sinh_solution(double x) { return 1.0 - (std::sinh(x) + std::sinh(1.0 - x)) / std::sinh(1.0); }

double sup_error_vs(const GridFunction& u, double (*f)(double)) {
  double e = 0.0;
  for (std::size_t i = 0; i < u.node_count(); ++i) e = std::max(e, std::abs(u.at(i)(0) - f(u.mesh().x(i))));
  return e;
}

ProblemInstance cubic_dip(double eps) {
  auto cfg = shipped("cubic");
  auto inst = cfg.instance(eps);
  for (const auto& d : cfg.defects) {
    if (d.id == "dip") inst.B = d.B;
  }
  return inst;
}

}  // namespace

TEST_CASE("solve_homogenized") {
  SUBCASE("zero data") {
    auto inst = scalar_instance("0", "0");
    auto r = solve_homogenized(inst, instance_mesh(inst, 16));
    CHECK(r.converged);
    CHECK(r.iterations <= 1);
    CHECK(sup_norm(r.solution) == 0.0);
  }
  SUBCASE("linear reaction against the sinh profile") {
    auto inst = scalar_instance("0", "u1 - 1");
    std::vector<double> C;
    for (std::size_t n : {32, 64, 128}) {
      auto mesh = instance_mesh(inst, n);
      auto r = solve_homogenized(inst, mesh);
      REQUIRE(r.converged);
      double h = 1.0 / static_cast<double>(n);
      C.push_back(sup_error_vs(r.solution, sinh_solution) / (h * h));
    }
    CHECK(C[0] > 0.0);
    CHECK(C[2] / C[0] == doctest::Approx(1.0).epsilon(0.1));
  }
  SUBCASE("quadratic residual decay") {
    auto inst = scalar_instance("0.3*u1", "u1^3 + u1 - 40*x");
    auto r = solve_homogenized(inst, instance_mesh(inst, 64));
    REQUIRE(r.converged);
    const auto& res = r.fixed_point_residuals;
    REQUIRE(res.size() >= 3);
    CHECK(res.back() <= 1e-11);
    for (std::size_t k = 1; k < res.size(); ++k) {
      if (res[k] < 1e-12 || res[k - 1] > 1.0) continue;
      CHECK(res[k] / (res[k - 1] * res[k - 1]) <= 10.0);
    }
  }
}

TEST_CASE("non-degeneracy diagnostics") {
  SUBCASE("zero data") {
    auto inst = scalar_instance("0", "0");
    auto mesh = instance_mesh(inst, 32);
    auto nd = check_nondegeneracy(inst, GridFunction(mesh, 1));
    CHECK(nd.alpha == doctest::Approx(1.0));
    CHECK_FALSE(nd.degenerate);
  }
  SUBCASE("kernel element sin(pi x) is flagged") {
    auto inst = scalar_instance("0", "-pi^2*u1");
    auto mesh = instance_mesh(inst, 1024);
    auto nd = check_nondegeneracy(inst, GridFunction(mesh, 1), 1e-6, false);
    CHECK(nd.alpha < 1e-5);
    CHECK(nd.degenerate);
  }
  SUBCASE("u'' = u") {
    auto inst = scalar_instance("0", "u1");
    auto mesh = instance_mesh(inst, 64);
    auto nd = check_nondegeneracy(inst, GridFunction(mesh, 1));
    CHECK(nd.alpha >= 0.5);
    CHECK(nd.alpha_refined >= 0.5);
    CHECK_FALSE(nd.degenerate);
  }
  SUBCASE("sufficient condition") {
    auto mesh = std::make_shared<const Mesh>(Mesh::uniform(32));
    GridFunction z(mesh, 1);
    auto yes = scalar_instance("0", "u1");
    CHECK(sufficient_nondegeneracy(yes, z).holds);
    CHECK_FALSE(sufficient_nondegeneracy(scalar_instance("0", "-u1"), z).holds);
    auto small_c = scalar_instance("0.001*sin(u1)", "u1");
    auto sc = sufficient_nondegeneracy(small_c, z);
    CHECK(sc.holds);
    CHECK(sc.d_floor == doctest::Approx(1.0));
    CHECK(sc.c_norm == doctest::Approx(0.001));
    CHECK_FALSE(sufficient_nondegeneracy(scalar_instance("5*u1", "u1"), z).holds);
    for (const auto* inst : {&yes, &small_c}) {
      CHECK_FALSE(check_nondegeneracy(*inst, z).degenerate);
    }
  }
}

TEST_CASE("solve_eps") {
  SUBCASE("u-independent data converges at once to the quadrature solution") {
    for (int k : {2, 5, 9}) {
      auto inst = scalar_instance("0.2*x", "3*x + 1", two_phase(), PiecewiseMatrixField::zero_defect(1), 1.0 / k);
      auto mesh = instance_mesh(inst, 128);
      auto u0 = solve_homogenized(inst, mesh).solution;
      auto r = solve_eps(inst, u0);
      CHECK(r.converged);
      CHECK(r.iterations <= 2);
      CHECK(sup_norm(r.solution - closed_form_linear(inst, mesh)) <= 1e-10);
    }
  }
  SUBCASE("cubic with a defect contracts at rate one half") {
    auto inst = cubic_dip(std::ldexp(1.0, -6));
    auto mesh = instance_mesh(inst, 512);
    auto u0 = solve_homogenized(inst, mesh).solution;
    auto r = solve_eps(inst, u0);
    REQUIRE(r.converged);
    for (std::size_t k = 1; k < r.contraction_factors.size(); ++k) CHECK(r.contraction_factors[k] <= 0.55);
    for (std::size_t k = 2; k < r.residual_history.size(); ++k) {
      CHECK(r.residual_history[k] < r.residual_history[k - 1]);
    }
    CHECK(r.bound_satisfied);
    CHECK(r.error_vs_u0 <= 2.0 / r.alpha * r.discrepancy);
    CHECK(r.fixed_point_residuals.back() <= 1e-10);
    CHECK(weak_residual(inst, r.solution, LoadRule::Consistent) <= 1e-8);
  }
  SUBCASE("out-of-regime epsilon raises NoConvergence with a trace") {
    auto cfg = shipped("stiff");
    auto inst = cfg.instance(0.5);
    auto mesh = instance_mesh(inst, cfg.study.n_target);
    auto u0 = solve_homogenized(inst, mesh).solution;
    try {
      solve_eps(inst, u0);
      FAIL("expected NoConvergence");
    } catch (const NoConvergence& e) {
      CHECK_FALSE(e.residuals().empty());
      CHECK_FALSE(e.factors().empty());
    }
  }
}

TEST_CASE("fixed points solve the weak form") {
  for (const char* name : {"cubic", "linear", "system"}) {
    CAPTURE(name);
    auto cfg = shipped(name);
    auto inst = cfg.instance(0.1);
    auto mesh = instance_mesh(inst, 128);
    auto u0 = solve_homogenized(inst, mesh).solution;
    auto r = solve_eps(inst, u0);
    REQUIRE(r.converged);
    CHECK(sup_norm(r.solution - apply_F_eps(inst, r.solution)) <= 1e-10);
    CHECK(weak_residual(inst, r.solution, LoadRule::Consistent) <= 1e-8);
  }
}

TEST_CASE("local uniqueness probe") {
  SUBCASE("linear instance") {
    auto inst = scalar_instance("0.2*x", "u1 + 5*cos(pi*x)", two_phase(), PiecewiseMatrixField::zero_defect(1), 0.1);
    auto mesh = instance_mesh(inst, 128);
    auto u0 = solve_homogenized(inst, mesh).solution;
    auto star = solve_eps(inst, u0).solution;
    auto p = local_uniqueness_probe(inst, u0, star, 10, 0.1, 42);
    CHECK(p.unique);
    CHECK(p.converged == 10);
    CHECK(p.max_deviation <= 1e-12);
  }
  SUBCASE("cubic instance at radius 0.1") {
    auto inst = cubic_dip(0.0625);
    auto mesh = instance_mesh(inst, 256);
    auto u0 = solve_homogenized(inst, mesh).solution;
    auto star = solve_eps(inst, u0).solution;
    auto p = local_uniqueness_probe(inst, u0, star, 10, 0.1, 7);
    CHECK(p.unique);
    CHECK(p.restarts == 10);
  }
  SUBCASE("a radius beyond the basin is reported, not raised") {
    auto cfg = shipped("stiff");
    auto inst = cfg.instance(0.0625);
    auto mesh = instance_mesh(inst, cfg.study.n_target);
    auto u0 = solve_homogenized(inst, mesh).solution;
    auto star = solve_eps(inst, u0).solution;
    ProbeReport p;
    CHECK_NOTHROW(p = local_uniqueness_probe(inst, u0, star, 10, 5.0, 3));
    CHECK_FALSE(p.unique);
  }
}
