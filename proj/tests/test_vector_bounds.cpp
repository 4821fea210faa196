#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "poincare/reproduce.hpp"
#include "poincare/vector_bounds.hpp"

using namespace poincare;
using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;

Vec3 v2(double x, double y) { return Vec3(x, y, 0.0); }

ConstantBound upper(double v) { return {v, BoundKind::Upper, "test", {}}; }

NormalSystem two_normals(double beta) {
  Eigen::MatrixXd rows(2, 2);
  rows << 1.0, 0.0, std::cos(beta), std::sin(beta);
  return normal_system_from_rows(rows);
}

}  // namespace

TEST_CASE("2D vector constant at right angles equals the larger scalar constant") {
  const VectorConstant vc = vector_constant_2d(upper(0.3), upper(0.5), pi / 2);
  CHECK(vc.value == Approx(0.5));
  CHECK(vc.lambda_min == Approx(1.0));
  // the d/λ₁ form keeps its √2 at right angles
  const VectorConstant g = vector_constant_general({upper(0.3), upper(0.5)}, two_normals(pi / 2));
  CHECK(g.value == Approx(0.5 * std::sqrt(2.0)));
}

TEST_CASE("2D vector constant against its closed form") {
  for (double beta : {0.2, 0.7, 1.2, 2.0, 2.9}) {
    const double c = std::abs(std::cos(beta));
    const VectorConstant vc = vector_constant_2d(upper(1.0), upper(0.4), beta);
    CHECK(vc.value == Approx(std::sqrt((1 + c) / (1 - c))));
    // β and π − β give the same constant
    CHECK(vector_constant_2d(upper(1.0), upper(0.4), pi - beta).value == Approx(vc.value));
  }
}

TEST_CASE("2D form never exceeds the general form") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.01, pi - 0.01), c(0.1, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double beta = u(rng);
    const ConstantBound a = upper(c(rng)), b = upper(c(rng));
    const double two_d = vector_constant_2d(a, b, beta).value;
    const VectorConstant g = vector_constant_general({a, b}, two_normals(beta));
    REQUIRE(two_d <= g.value * (1 + 1e-12));
    REQUIRE(g.lambda_min == Approx(1.0 - std::abs(std::cos(beta))).margin(1e-12));
  }
}

TEST_CASE("degenerate angles and inputs are rejected") {
  CHECK_THROWS_AS(vector_constant_2d(upper(1), upper(1), 0.0), Error);
  CHECK_THROWS_AS(vector_constant_2d(upper(1), upper(1), pi), Error);
  CHECK_THROWS_AS(vector_constant_2d(upper(0), upper(1), 1.0), Error);
  CHECK_THROWS_AS(vector_constant_general({upper(1)}, two_normals(1.0)), Error);
  Eigen::MatrixXd rows(2, 2);
  rows << 1.0, 0.0, 1.0, 1e-12;
  CHECK_THROWS_AS(normal_system_from_rows(rows), Error);
}

TEST_CASE("3D general form on an orthogonal frame") {
  const NormalSystem ns = normal_system_from_rows(Eigen::MatrixXd::Identity(3, 3));
  const VectorConstant vc = vector_constant_general({upper(0.2), upper(0.4), upper(0.3)}, ns);
  CHECK(vc.lambda_min == Approx(1.0));
  CHECK(vc.value == Approx(0.4 * std::sqrt(3.0)));
}

TEST_CASE("vector constant of cells from their faces") {
  const Cell sq = Cell::rectangle(1.0, 1.0);
  const VectorConstant vc = vector_constant_for_cell(sq, {0, 1});
  // both sides: 2/π exactly, normals orthogonal
  CHECK(vc.value == Approx(2.0 / pi));
  CHECK(vc.formula == "vector-2d");
  CHECK(vector_constant_for_cell(sq, {0, 1}, {}, true).value == Approx(2.0 * std::sqrt(2.0) / pi));
  CHECK_THROWS_AS(vector_constant_for_cell(sq, {0, 2}), Error);

  const Cell tet = detail::right_tetrahedron();
  const VectorConstant v3 = vector_constant_for_cell(tet, {1, 2, 3});
  CHECK(v3.formula == "vector-general");
  CHECK(v3.lambda_min == Approx(1.0));
  CHECK(v3.scalar_constants_used.size() == 3);
}

TEST_CASE("normal angle") {
  CHECK(normal_angle(Vec3(1, 0, 0), Vec3(0, 2, 0)) == Approx(pi / 2));
  CHECK(normal_angle(Vec3(1, 0, 0), Vec3(-1, 1, 0)) == Approx(3 * pi / 4));
}

TEST_CASE("macrocell scalar constant is the largest child constant") {
  const ConstantBound m = macrocell_scalar_constant({upper(0.2), upper(0.7), upper(0.4)});
  CHECK(m.value == 0.7);
  CHECK(m.kind == BoundKind::Upper);
}

TEST_CASE("pair plans are validated") {
  PairGroup g1{{0}, {std::make_pair(0, 0), std::make_pair(0, 1)}};
  PairGroup g2{{1}, {std::make_pair(1, 0), std::make_pair(1, 1)}};
  CHECK_NOTHROW(validate_pair_plan({g1, g2}, 2));
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Solver;
  };
  CHECK(kind_of([&] { validate_pair_plan({g1}, 2); }) == ErrorKind::InvalidPlan);
  CHECK(kind_of([&] { validate_pair_plan({g1, g1}, 1); }) == ErrorKind::InvalidPlan);
  PairGroup foreign{{1}, {std::make_pair(0, 0), std::make_pair(1, 1)}};
  CHECK(kind_of([&] { validate_pair_plan({g1, foreign}, 2); }) == ErrorKind::InvalidPlan);
  PairGroup twice{{0}, {std::make_pair(0, 0), std::make_pair(0, 0)}};
  CHECK(kind_of([&] { validate_pair_plan({twice, g2}, 2); }) == ErrorKind::InvalidPlan);
  CHECK(kind_of([&] { validate_pair_plan({}, 0); }) == ErrorKind::InvalidPlan);
}

TEST_CASE("greedy pairing covers every child of a macrocell") {
  // unit square cut into four triangles around its centre
  const Vec3 c = v2(0.5, 0.5);
  const Cell macro = Cell::macrocell({Cell::triangle(v2(0, 0), v2(1, 0), c), Cell::triangle(v2(1, 0), v2(1, 1), c),
                                      Cell::triangle(v2(1, 1), v2(0, 1), c), Cell::triangle(v2(0, 1), v2(0, 0), c)});
  const auto plan = greedy_pair_plan(macro);
  CHECK_NOTHROW(validate_pair_plan(plan, 4));
  std::vector<PairConstant> pcs;
  for (const auto& g : plan) pcs.push_back(pair_vector_constant(macro, g));
  const VectorConstant mv = macrocell_vector_constant(pcs, 4);
  double worst = 0.0;
  for (const auto& p : pcs) worst = std::max(worst, p.constant.value);
  CHECK(mv.value == worst);
  CHECK(mv.value > 0.0);
}

TEST_CASE("odd number of children falls back to a child's own faces") {
  const Cell macro = Cell::macrocell({Cell::triangle(v2(0, 0), v2(1, 0), v2(0, 1))});
  const auto plan = greedy_pair_plan(macro);
  REQUIRE(plan.size() == 1);
  CHECK(plan[0].children == std::vector<int>{0});
  CHECK_THROWS_AS(greedy_pair_plan(Cell::rectangle(1, 1)), Error);
}
