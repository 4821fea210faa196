#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "poincare/fem_oracle.hpp"
#include "poincare/reproduce.hpp"
#include "poincare/scalar_bounds.hpp"
#include "poincare/vector_bounds.hpp"

using namespace poincare;
using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double zeta = 2.02876;

Vec3 v2(double x, double y) { return Vec3(x, y, 0.0); }

OracleOptions at_level(int level) {
  OracleOptions o;
  o.level = level;
  return o;
}

}  // namespace

TEST_CASE("refinement multiplies simplices by 2^d and keeps tags") {
  const Cell sq = Cell::rectangle(1.0, 1.0);
  const SimplicialMesh m0 = triangulate(sq, 0);
  const SimplicialMesh m2 = triangulate(sq, 2);
  CHECK(m2.simplex_count() == 16 * m0.simplex_count());
  CHECK(m2.tagged_measure(0) == Approx(1.0));
  CHECK(m2.tagged_measure(3) == Approx(1.0));
  double area = 0.0;
  for (int i = 0; i < m2.simplex_count(); ++i) area += simplex_volume(m2.simplex(i));
  CHECK(area == Approx(1.0));

  const Cell tet = detail::right_tetrahedron();
  const SimplicialMesh t1 = triangulate(tet, 1);
  CHECK(t1.simplex_count() == 8);
  CHECK(t1.tagged_measure(3) == Approx(0.5));
}

TEST_CASE("assembled matrices integrate constants and linears") {
  const SimplicialMesh m = triangulate(Cell::rectangle(2.0, 1.0), 2);
  const AssembledSystem sys = assemble(m);
  const int n = m.vertex_count();
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(n);
  CHECK(one.dot(sys.mass * one) == Approx(2.0));
  CHECK((sys.stiffness * one).norm() == Approx(0.0).margin(1e-12));
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = m.vertices[i].x();
  CHECK(x.dot(sys.stiffness * x) == Approx(2.0));
  CHECK(one.dot(boundary_mass(m, {0}) * one) == Approx(2.0));
}

TEST_CASE("C_P of the unit square converges to 1/pi from below") {
  const OracleResult r = sharp_cp(Cell::rectangle(1.0, 1.0), at_level(5));
  CHECK(r.constant == Approx(1.0 / pi).epsilon(1e-3));
  CHECK(r.constant <= 1.0 / pi * (1 + 1e-9));
  REQUIRE(r.extrapolated.has_value());
  CHECK(std::abs(*r.extrapolated - 1.0 / pi) < std::abs(r.constant - 1.0 / pi));
  // eigenvalue tolerance 1e-10 leaves an eigenvector residual of order its square root
  CHECK(r.residual < 1e-5);
}

TEST_CASE("discrete constants increase with the level") {
  OracleOptions o = at_level(4);
  o.min_level = 1;
  const OracleResult r = sharp_c_gamma(Cell::rectangle(1.0, 0.75), {0}, o);
  REQUIRE(r.table.size() == 4);
  for (std::size_t i = 1; i < r.table.size(); ++i) {
    CHECK(r.table[i].constant >= r.table[i - 1].constant * (1 - 1e-10));
    CHECK(r.table[i].unknowns > r.table[i - 1].unknowns);
  }
  const std::string csv = convergence_table_csv(r);
  CHECK(csv.rfind("level,", 0) == 0);
}

TEST_CASE("rectangle and triangle oracles match the exact constants") {
  const Cell r = Cell::rectangle(1.0, 0.75);
  CHECK(sharp_c_gamma(r, {0}, at_level(5)).constant == Approx(1.5 / pi).epsilon(2e-3));
  CHECK(sharp_c_gamma(r, {0, 1, 2, 3}, at_level(5)).constant == Approx(1.0 / pi).epsilon(2e-3));
  const Cell t = detail::unit_right_triangle();
  CHECK(sharp_c_gamma(t, {0}, at_level(6)).constant == Approx(1.0 / zeta).epsilon(2e-3));
  CHECK(sharp_c_gamma(t, {0, 2}, at_level(6)).constant == Approx(1.0 / pi).epsilon(2e-3));
}

TEST_CASE("unit cube C_P") {
  const OracleResult r = sharp_cp(Cell::box(1.0, 1.0, 1.0), at_level(3));
  CHECK(r.constant == Approx(1.0 / pi).epsilon(1e-2));
  CHECK(r.constant <= 1.0 / pi * (1 + 1e-9));
}

TEST_CASE("oracle values lie between the lower and upper bounds") {
  const Cell t = Cell::triangle(v2(0, 0), v2(1.2, 0.1), v2(0.3, 0.9));
  for (int g = 0; g < 3; ++g) {
    const double c = sharp_c_gamma(t, {g}, at_level(5)).constant;
    CHECK(c <= c_gamma_triangle(t, g).value);
    CHECK(c >= c_gamma_lower(t).value * (1 - 1e-3));
  }
  const Cell tet = detail::right_tetrahedron();
  CHECK(sharp_c_gamma(tet, {3}, at_level(3)).constant <= c_gamma_tetrahedron(tet, 3).value);
}

TEST_CASE("trace and vector problems") {
  const Cell sq = Cell::rectangle(1.0, 1.0);
  const OracleResult tr = sharp_trace_constant(sq, {0}, at_level(4));
  CHECK(tr.constant > 0.0);
  CHECK(tr.kind == OracleKind::Trace);
  const OracleResult vr = sharp_vector_constant(sq, {0, 1}, at_level(4));
  CHECK(vr.constraint_residual < 1e-8);
  CHECK(vr.constant <= vector_constant_for_cell(sq, {0, 1}).value);
  // constraints on both sides: at least as large as one scalar constraint's constant
  CHECK(vr.constant >= sharp_cp(sq, at_level(4)).constant * (1 - 1e-8));
  CHECK_THROWS_AS(sharp_vector_constant(sq, {0, 2}, at_level(2)), Error);
}

TEST_CASE("random fields never beat the computed constant") {
  const OracleResult r = sharp_c_gamma(detail::unit_right_triangle(), {1}, at_level(4));
  CHECK(rayleigh_sample(r.problem, 50, 7) <= r.constant * (1 + 1e-10));
  CHECK(rayleigh_sample(r.problem, 20, 7, &r.eigenvector, 1e-3) <= r.constant * (1 + 1e-10));
  CHECK(rayleigh_sample(r.problem, 20, 7, &r.eigenvector, 1e-3) >= r.constant * (1 - 1e-3));
  CHECK_THROWS_AS(rayleigh_sample(r.problem, 0, 7), Error);
}

TEST_CASE("segment domain on a boundary edge agrees with the face oracle") {
  const Cell sq = Cell::rectangle(1.0, 1.0);
  const OracleDomain d = segment_domain(simplex_decomposition(sq), v2(0, 0), v2(1, 0));
  const OracleResult seg = sharp_constant(d, OracleKind::Boundary, {0}, {}, at_level(4));
  const OracleResult face = sharp_c_gamma(sq, {0}, at_level(4));
  CHECK(seg.constant == Approx(face.constant).epsilon(1e-8));
}

TEST_CASE("diagonal cut of the square") {
  const OracleDomain d = segment_domain(
      {{v2(0, 0), v2(1, 0), v2(1, 1)}, {v2(0, 0), v2(1, 1), v2(0, 1)}}, v2(0, 0), v2(1, 1));
  const OracleResult r = sharp_constant(d, OracleKind::Boundary, {0}, {}, at_level(5));
  // between C_P and the value for a side of the square
  CHECK(r.constant > 1.0 / pi);
  CHECK(r.constant < 2.0 / pi);
}

TEST_CASE("oracle input errors") {
  const Cell sq = Cell::rectangle(1.0, 1.0);
  CHECK_THROWS_AS(sharp_cp(sq, at_level(-1)), Error);
  CHECK_THROWS_AS(sharp_c_gamma(sq, {4}, at_level(2)), Error);
  CHECK(to_string(OracleKind::Poincare) == "cp");
  CHECK(to_string(OracleKind::Vector) == "vector");
}
