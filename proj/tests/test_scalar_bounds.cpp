#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "poincare/reproduce.hpp"
#include "poincare/scalar_bounds.hpp"

using namespace poincare;
using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double j01 = 2.404825557695773;
constexpr double j11 = 3.831705970207512;
constexpr double zeta = 2.02876;

Vec3 v2(double x, double y) { return Vec3(x, y, 0.0); }

const ConstantBound* find(const std::vector<ConstantBound>& bs, const std::string& formula) {
  for (const auto& b : bs) {
    if (b.formula == formula) return &b;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("C_P bounds on the unit square") {
  const Cell sq = Cell::rectangle(1.0, 1.0);
  const double d = std::sqrt(2.0);
  CHECK(cp_upper_convex(sq).value == Approx(d / pi));
  CHECK(cp_upper_classical(sq).value == Approx(std::sqrt(7.0 / 24.0) * d));
  CHECK(cp_lower_cheng(sq).value == Approx(d / (2 * j01)));
  CHECK(cp_lower_cheng(sq).kind == BoundKind::Lower);
  CHECK(best_cp_upper(sq).value == Approx(d / pi));
  CHECK_FALSE(is_isosceles(sq));
}

TEST_CASE("C_P in 3D uses 3/4 d for the classical bound") {
  const Cell box = Cell::box(1.0, 1.0, 1.0);
  CHECK(cp_upper_classical(box).value == Approx(0.75 * std::sqrt(3.0)));
  CHECK_THROWS_AS(cp_lower_cheng(box), Error);
}

TEST_CASE("isosceles triangles get d/j11") {
  const Cell t = detail::unit_right_triangle();
  REQUIRE(is_isosceles(t));
  CHECK(cp_upper_isosceles(t).value == Approx(std::sqrt(2.0) / j11));
  CHECK(best_cp_upper(t).value == Approx(std::sqrt(2.0) / j11));
  const Cell scalene = Cell::triangle(v2(0, 0), v2(1, 0), v2(0.2, 0.7));
  CHECK_FALSE(is_isosceles(scalene));
  CHECK_THROWS_AS(cp_upper_isosceles(scalene), Error);
}

TEST_CASE("nonconvex cells need a user-supplied C_P") {
  const Cell l = Cell::polygon({v2(0, 0), v2(2, 0), v2(2, 1), v2(1, 1), v2(1, 2), v2(0, 2)});
  CHECK_THROWS_AS(cp_upper_convex(l), Error);
  CHECK_THROWS_AS(cp_upper(l, {CpMode::Convex, 0.0}), Error);
  CHECK(cp_upper(l, {CpMode::User, 0.7}).value == 0.7);
  CHECK_THROWS_AS(cp_upper(l, {CpMode::User, -1.0}), Error);
}

TEST_CASE("exact values for rectangles, boxes and the right isosceles triangle") {
  const Cell r = Cell::rectangle(1.0, 0.75);
  // Γ along the side of length 1, width 0.75 across: max{1.5, 1}/π
  CHECK(exact_table1(r, {0})->value == Approx(1.5 / pi));
  // Γ along the short side: max{2, 0.75}/π
  CHECK(exact_table1(r, {1})->value == Approx(2.0 / pi));
  CHECK(exact_table1(r, {0, 1, 2, 3})->value == Approx(1.0 / pi));
  CHECK_FALSE(exact_table1(r, {0, 1}).has_value());

  const Cell b = Cell::box(1.0, 0.8, 0.6);
  CHECK(exact_table1(b, {0})->value == Approx(1.2 / pi));
  CHECK(exact_table1(b, {0})->formula == "table1-box-face");

  const Cell t = detail::unit_right_triangle();
  // faces 0 and 2 are legs, face 1 the hypotenuse
  CHECK(exact_table1(t, {0})->value == Approx(1.0 / zeta));
  CHECK(exact_table1(t, {2})->value == Approx(1.0 / zeta));
  CHECK(exact_table1(t, {0, 2})->value == Approx(1.0 / pi));
  CHECK(exact_table1(t, {1})->value == Approx(std::sqrt(2.0) / zeta));

  const Cell tilted = Cell::quadrilateral(v2(0, 0), v2(1, 0), v2(1.2, 1), v2(0, 1));
  CHECK_FALSE(exact_table1(tilted, {0}).has_value());
}

TEST_CASE("exact values scale linearly and ignore rigid motions") {
  const double s = 3.5;
  const Cell t = Cell::triangle(v2(2, 1), v2(2 + s * std::cos(0.3), 1 + s * std::sin(0.3)),
                                v2(2 - s * std::sin(0.3), 1 + s * std::cos(0.3)));
  CHECK(exact_table1(t, {0})->value == Approx(s / zeta));
  CHECK(exact_table1(t, {0, 2})->value == Approx(s / pi));
}

TEST_CASE("triangle bound on the unit right triangle") {
  const Cell t = detail::unit_right_triangle();
  // leg Γ: angles 90 and 45 degrees give Σ = 4, h = 1
  const double expected = std::sqrt(2.0 / (pi * pi) + 4.0 / 24.0);
  const ConstantBound b = c_gamma_triangle(t, 0);
  CHECK(b.value == Approx(expected));
  CHECK(b.kind == BoundKind::Upper);
  CHECK(b.formula == "cgamma-triangle[cp-payne-weinberger]");
  CHECK(c_gamma_triangle(t, 0, {CpMode::User, 0.3}).value == Approx(std::sqrt(0.09 + 4.0 / 24.0)));
  CHECK(c_gamma_lower(t).value == Approx(std::sqrt(2.0) / (2 * j01)));
}

TEST_CASE("tetrahedron bound on the right tetrahedron base") {
  const Cell tet = detail::right_tetrahedron();
  // apex (0,0,1): |η|²+|ζ|²+|σ|² = 5, pairwise products sum to 3
  const double expected = std::sqrt(2.0 / (pi * pi) + 8.0 / 90.0);
  CHECK(c_gamma_tetrahedron(tet, 3).value == Approx(expected));
  CHECK(expected == Approx(0.53994).margin(5e-6));
}

TEST_CASE("pyramid bound and its equal-area precondition") {
  const Cell pyr = Cell::pyramid(v2(0, 0), v2(1, 0), v2(1, 1), v2(0, 1), Vec3(0.5, 0.5, 1));
  const ConstantBound b = c_gamma_pyramid(pyr, 0);
  const Vec3 o(0.5, 0.5, 1), A(0, 0, 0), B(1, 0, 0), C(1, 1, 0), D(0, 1, 0);
  const Vec3 eta = A - o, zet = B - o, sig = C - o, chi = D - o;
  const double s = 2 * eta.squaredNorm() + zet.squaredNorm() + 2 * sig.squaredNorm() + chi.squaredNorm() +
                   2 * eta.dot(sig) + (eta + sig).dot(chi + zet);
  CHECK(b.value == Approx(std::sqrt(pyr.diameter() * pyr.diameter() / (pi * pi) + s / 180.0)));
  const Cell skew = Cell::pyramid(v2(0, 0), v2(2, 0), v2(1, 1), v2(0, 1), Vec3(0.5, 0.5, 1));
  CHECK_THROWS_AS(c_gamma_pyramid(skew, 0), Error);
  CHECK_THROWS_AS(c_gamma_pyramid(pyr, 1), Error);
}

TEST_CASE("prism bounds") {
  const Cell box = Cell::box(1.0, 1.0, 0.5);
  const double cp = std::sqrt(1.0 + 1.0 + 0.25) / pi;
  // constant height: κ = 0
  CHECK(c_gamma_prism(box).value == Approx(std::sqrt(cp * cp + 0.25 / 3.0)));
  CHECK(c_gamma_prism_constant_height(box).value ==
        Approx(std::sqrt((2.0 + (1.0 + pi * pi / 3.0) * 0.25) / (pi * pi))));

  const Cell slanted = Cell::prism({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}, {1.0, 1.5, 2.0});
  const auto [mean_h, min_h] = prism_height_stats(slanted);
  CHECK(mean_h == Approx(1.5));
  CHECK(min_h == 1.0);
  CHECK_THROWS_AS(c_gamma_prism_constant_height(slanted), Error);
  const double cps = slanted.diameter() / pi;
  const double inner = 1.5 / std::sqrt(3.0) + cps * std::sqrt(0.5);
  CHECK(c_gamma_prism(slanted).value == Approx(std::sqrt(cps * cps + inner * inner)));
}

TEST_CASE("quadrilateral bound reduces to the triangle bound plus the split") {
  const Cell sq = Cell::rectangle(1.0, 1.0);
  const ConstantBound b = c_gamma_quadrilateral(sq, 0);
  CHECK(b.kind == BoundKind::Upper);
  CHECK(b.value >= exact_table1(sq, {0})->value);
  for (const auto& s : quadrilateral_splits(sq, 0)) {
    CHECK(c_gamma_quadrilateral(sq, 0, s, cp_upper_convex(sq)).value >= b.value - 1e-12);
  }
}

TEST_CASE("applicable bounds list and best upper bound") {
  const Cell t = detail::unit_right_triangle();
  const auto bs = applicable_c_gamma_bounds(t, {0});
  REQUIRE(find(bs, "table1-triangle-leg"));
  REQUIRE(find(bs, "cgamma-triangle[cp-payne-weinberger]"));
  REQUIRE(find(bs, "cgamma-lower-cheng"));
  CHECK(best_c_gamma_upper(t, {0}).formula == "table1-triangle-leg");

  // Pentagon with a single face: nothing closed-form applies.
  const Cell penta = Cell::polygon({v2(0, 0), v2(2, 0), v2(2.5, 1), v2(1, 2), v2(-0.5, 1)});
  try {
    best_c_gamma_upper(penta, {0});
    FAIL("expected a precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
    CHECK(std::string(e.what()).find("flux field") != std::string::npos);
  }
  CHECK_THROWS_AS(applicable_c_gamma_bounds(t, {5}), Error);
}

TEST_CASE("whole-boundary majorant for tangential polygons") {
  const Cell t = Cell::triangle(v2(0, 0), v2(1, 0), v2(0.3, 0.8));
  const auto bs = applicable_c_gamma_bounds(t, {0, 1, 2});
  bool flux = false;
  for (const auto& b : bs) flux = flux || b.formula.rfind("cgamma-flux-majorant", 0) == 0;
  CHECK(flux);
  const ConstantBound best = best_c_gamma_upper(t, {0, 1, 2});
  CHECK(best.value >= c_gamma_lower(t).value);
}

TEST_CASE("lower bounds stay below upper bounds on random cells") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 300; ++i) {
    const Cell t = detail::random_triangle(rng);
    for (int g = 0; g < 3; ++g) {
      const auto bs = applicable_c_gamma_bounds(t, {g});
      double lo = 0.0, up = 1e300;
      for (const auto& b : bs) {
        if (b.kind == BoundKind::Lower) lo = std::max(lo, b.value);
        else up = std::min(up, b.value);
      }
      REQUIRE(lo <= up);
      // C_Γ ≥ C_P for every Γ, so the triangle bound dominates the C_P bound it contains
      REQUIRE(c_gamma_triangle(t, g).value >= cp_upper_convex(t).value);
    }
    const Cell q = detail::random_convex_quadrilateral(rng);
    for (int g = 0; g < 4; ++g) REQUIRE(c_gamma_quadrilateral(q, g).value >= c_gamma_lower(q).value);
  }
}

TEST_CASE("bounds scale linearly with the cell") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> sc(0.2, 5.0);
  for (int i = 0; i < 100; ++i) {
    const Cell t = detail::random_triangle(rng);
    const double s = sc(rng);
    std::vector<Vec3> pts;
    for (const auto& p : t.vertices()) pts.push_back(s * p);
    const Cell big = Cell::polygon(pts);
    for (int g = 0; g < 3; ++g) REQUIRE(c_gamma_triangle(big, g).value == Approx(s * c_gamma_triangle(t, g).value));
    const Cell tet = detail::random_tetrahedron(rng);
    std::vector<Vec3> tv;
    for (const auto& p : tet.vertices()) tv.push_back(s * p);
    const Cell tet_big = Cell::tetrahedron(tv[0], tv[1], tv[2], tv[3]);
    for (int g = 0; g < 4; ++g) {
      REQUIRE(c_gamma_tetrahedron(tet_big, g).value == Approx(s * c_gamma_tetrahedron(tet, g).value));
    }
  }
}
