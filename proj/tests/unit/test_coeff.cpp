#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "defhom/coeff.hpp"
#include "defhom/errors.hpp"
#include "support.hpp"

using namespace defhom;
using namespace defhom::testing;

namespace {

// Independent exact ∫₀¹ (a(x/ε)+b(x/ε))⁻¹ for scalar fields: enumerate every
// scaled breakpoint, then sum length / value at the midpoint of each piece.
double brute_inverse_integral(const PiecewiseMatrixField& A, const PiecewiseMatrixField& B, double eps) {
  std::vector<double> pts = {0.0, 1.0};
  for (int j = -1; j <= static_cast<int>(1.0 / eps) + 1; ++j) {
    for (double b : A.breakpoints()) pts.push_back(eps * (j + b));
  }
  for (double b : B.breakpoints()) pts.push_back(eps * b);
  std::erase_if(pts, [](double p) { return p < 0.0 || p > 1.0; });
  std::sort(pts.begin(), pts.end());
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    double len = pts[i + 1] - pts[i];
    if (len <= 0.0) continue;
    double y = 0.5 * (pts[i] + pts[i + 1]) / eps;
    acc += len / (eval_field(A, y)(0, 0) + eval_field(B, y)(0, 0));
  }
  return acc;
}

}  // namespace

TEST_CASE("eval_field cell lookup, periodicity and defect support") {
  auto a = two_phase();
  CHECK(eval_field(a, 0.75)(0, 0) == 1.0);
  CHECK(eval_field(a, 1.25)(0, 0) == 2.0);
  CHECK(eval_field(a, -0.25)(0, 0) == 1.0);
  CHECK(eval_field(a, 0.5)(0, 0) == 1.0);  // right limit at a breakpoint
  auto b = scalar_defect({0.0, 1.0}, {-0.5});
  CHECK(eval_field(b, 3.0)(0, 0) == 0.0);
  CHECK(eval_field(b, 0.0)(0, 0) == -0.5);
  CHECK(eval_field(b, -1e-9)(0, 0) == 0.0);
  CHECK(eval_field(b, 1.0)(0, 0) == 0.0);
}

TEST_CASE("field construction rejects malformed input") {
  CHECK_THROWS(scalar_periodic({0.0, 0.7, 0.5, 1.0}, {1, 2, 3}));
  CHECK_THROWS(scalar_periodic({0.0, 0.5, 1.0}, {1}));
  CHECK_THROWS(scalar_periodic({0.0, 0.5}, {1}));
  CHECK_THROWS(scalar_defect({0.0, 1.0}, {std::nan("")}));
}

TEST_CASE("ellipticity report") {
  SUBCASE("identity") {
    auto A = PiecewiseMatrixField::constant(Matrix::Identity(2, 2));
    auto r = ellipticity(A, PiecewiseMatrixField::zero_defect(2));
    CHECK(r.m_A == doctest::Approx(1.0));
    CHECK(r.m_AB == doctest::Approx(1.0));
    CHECK(r.norm_B_inf == 0.0);
    CHECK(r.norm_B_1 == 0.0);
  }
  SUBCASE("single-cell defect") {
    auto r = ellipticity(scalar_periodic({0, 1}, {1}), scalar_defect({0, 1}, {-0.5}));
    CHECK(r.m_AB == doctest::Approx(0.5));
    CHECK(r.norm_B_inf == doctest::Approx(0.5));
    CHECK(r.norm_B_1 == doctest::Approx(0.5));
    CHECK(r.sup_inv_AB == doctest::Approx(2.0));
  }
  SUBCASE("degenerate cell") {
    CHECK_THROWS_AS(ellipticity(scalar_periodic({0, 1}, {1}), scalar_defect({0, 1}, {-1})), NonElliptic);
  }
  SUBCASE("uses the symmetric part only") {
    Matrix m(2, 2);
    m << 1, 5, -5, 1;
    auto r = ellipticity(PiecewiseMatrixField::constant(m), PiecewiseMatrixField::zero_defect(2));
    CHECK(r.m_A == doctest::Approx(1.0));
  }
  SUBCASE("splitting cells changes nothing") {
    auto A1 = scalar_periodic({0, 0.3, 1}, {2, 1});
    auto A2 = scalar_periodic({0, 0.15, 0.3, 0.65, 1}, {2, 2, 1, 1});
    auto B1 = scalar_defect({-0.5, 1.5}, {0.4});
    auto B2 = scalar_defect({-0.5, 0.5, 1.5}, {0.4, 0.4});
    auto r1 = ellipticity(A1, B1);
    auto r2 = ellipticity(A2, B2);
    CHECK(std::abs(r1.m_AB - r2.m_AB) <= 1e-14);
    CHECK(std::abs(r1.norm_B_1 - r2.norm_B_1) <= 1e-14);
    CHECK(std::abs(r1.sup_inv_AB - r2.sup_inv_AB) <= 1e-14);
  }
}

TEST_CASE("M_r membership clauses") {
  auto a = scalar_periodic({0, 1}, {1});
  CHECK(check_Mr_membership(a, PiecewiseMatrixField::zero_defect(1), 2.0).member);
  auto b = scalar_defect({0, 1}, {-0.5});
  auto ok = check_Mr_membership(a, b, 2.0);
  CHECK(ok.member);
  CHECK(ok.norm_sum == doctest::Approx(1.0));
  CHECK(ok.form_lower_bound == doctest::Approx(0.5));
  auto bad = check_Mr_membership(a, b, 1.5);
  CHECK_FALSE(bad.member);
  CHECK(bad.violated.find("1/r") != std::string::npos);
  auto big = check_Mr_membership(a, scalar_defect({-2, 2}, {1.0}), 3.0);
  CHECK_FALSE(big.member);
  CHECK(big.violated.find("exceeds r") != std::string::npos);
  CHECK_FALSE(check_Mr_membership(a, b, 1.0).member);
  CHECK_FALSE(ok.literal_clause.empty());
}

TEST_CASE("homogenized matrix") {
  CHECK((homogenized_matrix_A0(PiecewiseMatrixField::constant(Matrix::Identity(2, 2))) - Matrix::Identity(2, 2))
            .norm() <= 1e-15);
  CHECK(std::abs(homogenized_matrix_A0(two_phase())(0, 0) - 4.0 / 3.0) <= 1e-12);

  // 1/(2 + sin 2πy) sampled at 1024 cell midpoints; exact mean of the inverse is 2.
  std::vector<double> bps, vals;
  for (int k = 0; k <= 1024; ++k) bps.push_back(k / 1024.0);
  for (int k = 0; k < 1024; ++k) vals.push_back(1.0 / (2.0 + std::sin(2 * std::numbers::pi * (k + 0.5) / 1024.0)));
  CHECK(std::abs(homogenized_matrix_A0(scalar_periodic(bps, vals))(0, 0) - 0.5) <= 1e-5);

  SUBCASE("symmetric positive definite for SPD cells") {
    Matrix c1(2, 2), c2(2, 2);
    c1 << 3, 1, 1, 2;
    c2 << 1, 0.2, 0.2, 4;
    auto A = PiecewiseMatrixField::periodic({0, 0.4, 1}, {c1, c2});
    Matrix A0 = homogenized_matrix_A0(A);
    CHECK((A0 - A0.transpose()).norm() <= 1e-14);
    CHECK(linalg::min_form_eigenvalue(A0) > 0.0);
    Matrix expect = (0.4 * c1.inverse() + 0.6 * c2.inverse()).inverse();
    CHECK((A0 - expect).norm() <= 1e-13);
  }
  CHECK_THROWS_AS(homogenized_matrix_A0(scalar_periodic({0, 1}, {0.0})), SingularCell);
}

TEST_CASE("effective matrix M_eps,B") {
  auto a = two_phase();
  auto zero = PiecewiseMatrixField::zero_defect(1);
  for (int k : {1, 2, 3, 7, 16, 100}) {
    CHECK(std::abs(effective_matrix_M(a, zero, 1.0 / k)(0, 0) - 4.0 / 3.0) <= 1e-13);
  }
  // ε = 0.3: brute-force summation over the scaled cells.
  double brute = 1.0 / brute_inverse_integral(a, zero, 0.3);
  CHECK(effective_matrix_M(a, zero, 0.3)(0, 0) == doctest::Approx(brute).epsilon(1e-12));
  // Hand summation: defect on [0, 0.1].
  double m = effective_matrix_M(scalar_periodic({0, 1}, {1}), scalar_defect({0, 1}, {-0.5}), 0.1)(0, 0);
  CHECK(std::abs(m - 1.0 / 1.1) <= 1e-14);

  SUBCASE("matches brute force with a defect straddling periods") {
    auto b = scalar_defect({-0.7, 0.2, 1.3}, {0.6, -0.4});
    for (double eps : {0.37, 0.11, 0.05}) {
      double exact = 1.0 / effective_matrix_M(a, b, eps)(0, 0);
      CHECK(exact == doctest::Approx(brute_inverse_integral(a, b, eps)).epsilon(1e-10));
    }
  }

  SUBCASE("converges to A0 at first order") {
    auto b = scalar_defect({0, 1}, {-0.5});
    std::vector<double> le, lerr;
    for (int j = 3; j <= 9; ++j) {
      double eps = std::ldexp(1.0, -j) * 1.1;
      le.push_back(std::log(eps));
      lerr.push_back(std::log(std::abs(effective_matrix_M(a, b, eps)(0, 0) - 4.0 / 3.0)));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < le.size(); ++i) mx += le[i], my += lerr[i];
    mx /= le.size();
    my /= le.size();
    double num = 0, den = 0;
    for (std::size_t i = 0; i < le.size(); ++i) num += (le[i] - mx) * (lerr[i] - my), den += (le[i] - mx) * (le[i] - mx);
    CHECK(num / den >= 0.9);
  }
}

TEST_CASE("scaled coefficient partition and interval queries") {
  auto a = two_phase();
  auto b = scalar_defect({0, 1}, {-0.5});
  auto coef = ScaledCoefficient::build(a, b, 0.4);
  auto bps = coef.interior_breakpoints();
  std::vector<double> expect = {0.2, 0.4, 0.6, 0.8};
  REQUIRE(bps.size() == expect.size());
  for (std::size_t i = 0; i < bps.size(); ++i) CHECK(bps[i] == doctest::Approx(expect[i]).epsilon(1e-14));
  // ∫ over [0.1, 0.5]: [0.1,0.2] value 1.5, [0.2,0.4] value 0.5, [0.4,0.5] value 2.
  double v = coef.integral_inverse(0.1, 0.5)(0, 0);
  CHECK(v == doctest::Approx(0.1 / 1.5 + 0.2 / 0.5 + 0.1 / 2.0).epsilon(1e-14));
  CHECK(coef.integral_inverse(0.3, 0.3)(0, 0) == 0.0);
  CHECK_THROWS_AS(ScaledCoefficient::build(a, b, 1e-9), MeshTooFine);
  CHECK_THROWS(ScaledCoefficient::build(a, b, 0.0));
}
