#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "poincare/fields.hpp"
#include "poincare/interpolation.hpp"
#include "poincare/mesh.hpp"
#include "poincare/reproduce.hpp"

using namespace poincare;
using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;

Vec3 v2(double x, double y) { return Vec3(x, y, 0.0); }

double mesh_gradient_norm(const std::vector<const Cell*>& cells, const VectorFn& g) {
  double s = 0.0;
  for (const Cell* c : cells) s += std::pow(gradient_norm(*c, g), 2);
  return std::sqrt(s);
}

double mesh_jacobian_norm(const std::vector<const Cell*>& cells, const MatrixFn& j) {
  double s = 0.0;
  for (const Cell* c : cells) s += std::pow(jacobian_norm(*c, j), 2);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("means over cells and faces") {
  const Cell t = detail::unit_right_triangle();
  auto x = [](const Vec3& p) { return p.x(); };
  CHECK(mean_over_cell(t, x) == Approx(1.0 / 3.0));
  CHECK(mean_over_faces(t, {0}, x) == Approx(0.5));
  CHECK(mean_over_faces(t, {2}, x) == Approx(0.0).margin(1e-15));
  // hypotenuse and one leg: (√2·0.5 + 1·0.5)/(√2 + 1)
  CHECK(mean_over_faces(t, {0, 1}, x) == Approx(0.5));
  const Cell sq = Cell::rectangle(1.0, 1.0);
  auto v = [](const Vec3& p) { return Vec3(p.x(), 2.0 * p.y(), 0.0); };
  // flux through the right side x = 1 is 1, through the top y = 1 is 2
  CHECK(mean_normal_flux(sq, 1, v) == Approx(1.0));
  CHECK(mean_normal_flux(sq, 2, v) == Approx(2.0));
}

TEST_CASE("constants are reproduced exactly") {
  const Cell q = Cell::quadrilateral(v2(0, 0), v2(2, 0), v2(1.5, 1), v2(0.2, 1.1));
  auto w = [](const Vec3&) { return 3.25; };
  for (const auto& pc : {interp_mean_domain(w, q), interp_mean_face(w, q, {1})}) {
    CHECK(pc.values[0][0] == Approx(3.25));
    CHECK(interpolation_error(cell_pointers(q), pc, w) == Approx(0.0).margin(1e-12));
  }
  auto v = [](const Vec3&) { return Vec3(1.5, -0.5, 0.0); };
  const PiecewiseConstant pv = interp_vector_cell(v, q, {0, 1});
  CHECK(pv.values[0][0] == Approx(1.5));
  CHECK(pv.values[0][1] == Approx(-0.5));
  CHECK(interpolation_error_vector(cell_pointers(q), pv, v) == Approx(0.0).margin(1e-12));
}

TEST_CASE("face-mean operator preserves the face mean and respects its bound") {
  const Cell t = detail::unit_right_triangle();
  const ScalarField f = parse_scalar_field("sin(pi*x)*cos(pi*y) + x^2*y");
  for (int g = 0; g < 3; ++g) {
    const PiecewiseConstant pc = interp_mean_face(f.value, t, {g});
    CHECK(std::abs(pc.residuals[0]) < 1e-12);
    const double err = interpolation_error(cell_pointers(t), pc, f.value);
    CHECK(err <= pc.bound * gradient_norm(t, f.gradient));
  }
  InterpOptions opt;
  opt.trace_constant = 0.9;
  const PiecewiseConstant pc = interp_mean_face(f.value, t, {0}, opt);
  REQUIRE(pc.trace_bound.has_value());
  CHECK(*pc.trace_bound == 0.9);
  CHECK(trace_error(t, {0}, f.value, pc.values[0][0]) >= 0.0);
  CHECK_THROWS_AS(interp_mean_face(f.value, t, {}), Error);
}

TEST_CASE("vector operator preserves normal-flux means") {
  const Cell sq = Cell::rectangle(1.0, 1.0);
  const VectorField f = parse_vector_field("[x*y + y^3, sin(pi*x)]");
  const PiecewiseConstant pc = interp_vector_cell(f.value, sq, {0, 1});
  for (double r : pc.residuals) CHECK(std::abs(r) < 1e-12);
  const double err = interpolation_error_vector(cell_pointers(sq), pc, f.value);
  CHECK(err <= pc.bound * jacobian_norm(sq, f.jacobian));
  CHECK(pc.bound == Approx(2.0 / pi));
  CHECK_THROWS_AS(interp_vector_cell(f.value, sq, {0, 2}), Error);
}

TEST_CASE("bound override replaces the attached constant") {
  const Cell sq = Cell::rectangle(1.0, 1.0);
  InterpOptions opt;
  opt.bound_override = 0.125;
  const PiecewiseConstant pc = interp_mean_face([](const Vec3& x) { return x.y(); }, sq, {0}, opt);
  CHECK(pc.bound == 0.125);
  CHECK(pc.bound_formula == "user");
}

TEST_CASE("error inequality on random cells and random polynomials") {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 40; ++i) {
    const Cell t = detail::random_triangle(rng);
    const Cell q = detail::random_convex_quadrilateral(rng);
    const ScalarField f = parse_scalar_field(detail::random_polynomial(rng, 2));
    for (const Cell* c : {&t, &q}) {
      const double grad = gradient_norm(*c, f.gradient);
      const PiecewiseConstant dom = interp_mean_domain(f.value, *c);
      REQUIRE(interpolation_error(cell_pointers(*c), dom, f.value) <= dom.bound * grad + 1e-12);
      for (int g = 0; g < c->face_count(); ++g) {
        const PiecewiseConstant pc = interp_mean_face(f.value, *c, {g});
        REQUIRE(std::abs(pc.residuals[0]) < 1e-10);
        REQUIRE(interpolation_error(cell_pointers(*c), pc, f.value) <= pc.bound * grad + 1e-12);
      }
    }
    const VectorField vf = parse_vector_field(detail::random_vector_polynomial(rng, 2));
    const PiecewiseConstant pv = interp_vector_cell(vf.value, t, {0, 1});
    REQUIRE(interpolation_error_vector(cell_pointers(t), pv, vf.value) <= pv.bound * jacobian_norm(t, vf.jacobian) + 1e-12);
  }
  for (int i = 0; i < 10; ++i) {
    const Cell tet = detail::random_tetrahedron(rng);
    const ScalarField f = parse_scalar_field(detail::random_polynomial(rng, 3));
    const PiecewiseConstant pc = interp_mean_face(f.value, tet, {0});
    REQUIRE(interpolation_error(cell_pointers(tet), pc, f.value) <= pc.bound * gradient_norm(tet, f.gradient) + 1e-12);
  }
}

TEST_CASE("macrocell operators") {
  const Vec3 c = v2(0.5, 0.5);
  const Cell macro = Cell::macrocell({Cell::triangle(v2(0, 0), v2(1, 0), c), Cell::triangle(v2(1, 0), v2(1, 1), c),
                                      Cell::triangle(v2(1, 1), v2(0, 1), c), Cell::triangle(v2(0, 1), v2(0, 0), c)});
  const ScalarField f = parse_scalar_field("x^2 + x*y");
  const PiecewiseConstant pc = interp_macrocell_scalar(f.value, macro);
  CHECK(pc.values.size() == 4);
  for (double r : pc.residuals) CHECK(std::abs(r) < 1e-12);
  const auto cells = cell_pointers(macro);
  CHECK(cells.size() == 4);
  CHECK(interpolation_error(cells, pc, f.value) <= pc.bound * mesh_gradient_norm(cells, f.gradient));

  const VectorField vf = parse_vector_field("[y^2, x*y]");
  const PiecewiseConstant pv = interp_macrocell_vector(vf.value, macro);
  for (double r : pv.residuals) CHECK(std::abs(r) < 1e-12);
  CHECK(interpolation_error_vector(cells, pv, vf.value) <= pv.bound * mesh_jacobian_norm(cells, vf.jacobian));
}

TEST_CASE("mesh operators on a uniform grid") {
  const Mesh mesh = uniform_rectangle_mesh(4, 3, 1.0, 0.75);
  CHECK(mesh.size() == 12);
  const auto cells = cell_pointers(mesh);
  const ScalarField f = parse_scalar_field("sin(pi*x)*y + x^3");
  const double grad = mesh_gradient_norm(cells, f.gradient);

  const PiecewiseConstant def = interp_mesh_scalar(f.value, mesh);
  CHECK(def.values.size() == 12);
  CHECK(def.max_residual() < 1e-12);
  CHECK(interpolation_error(cells, def, f.value) <= def.bound * grad);
  // every cell is a 0.25 x 0.25 square with Γ one side: 2·0.25/π
  CHECK(def.bound == Approx(0.5 / pi));

  MeshScalarPlan all;
  all.all_faces = true;
  const PiecewiseConstant pa = interp_mesh_scalar(f.value, mesh, all);
  CHECK(pa.bound == Approx(0.25 / pi));
  CHECK(interpolation_error(cells, pa, f.value) <= pa.bound * grad);

  MeshScalarPlan bad;
  bad.faces = {0, 1};
  try {
    interp_mesh_scalar(f.value, mesh, bad);
    FAIL("expected an invalid plan");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidPlan);
  }
  bad.faces.assign(12, 9);
  CHECK_THROWS_AS(interp_mesh_scalar(f.value, mesh, bad), Error);

  const VectorField vf = parse_vector_field("[x*y, y^2 - x]");
  const PiecewiseConstant pv = interp_mesh_vector(vf.value, mesh);
  CHECK(pv.max_residual() < 1e-12);
  CHECK(interpolation_error_vector(cells, pv, vf.value) <= pv.bound * mesh_jacobian_norm(cells, vf.jacobian));
  CHECK_THROWS_AS(interp_mesh_vector(vf.value, mesh, {{0, 1}}), Error);
}

TEST_CASE("default vector faces pick independent normals") {
  const Cell sq = Cell::rectangle(1.0, 1.0);
  CHECK(default_vector_faces(sq) == std::vector<int>{0, 1});
  const Cell tet = detail::right_tetrahedron();
  CHECK(default_vector_faces(tet).size() == 3);
}
