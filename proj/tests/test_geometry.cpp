#include <catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

#include "poincare/geometry.hpp"
#include "poincare/quadrature.hpp"

using namespace poincare;
using Catch::Approx;

namespace {

Vec3 v2(double x, double y) { return Vec3(x, y, 0.0); }

// Rotation by `t` about z plus a translation, applied to every vertex of a polygon.
Cell moved_polygon(const Cell& c, double t, const Vec3& shift) {
  Eigen::Matrix3d r = Eigen::AngleAxisd(t, Vec3::UnitZ()).toRotationMatrix();
  std::vector<Vec3> pts;
  for (const auto& p : c.vertices()) pts.push_back(r * p + shift);
  return Cell::polygon(pts);
}

Cell random_triangle(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    Vec3 a = v2(u(rng), u(rng)), b = v2(u(rng), u(rng)), c = v2(u(rng), u(rng));
    if ((b - a).cross(c - a).norm() > 0.05) return Cell::triangle(a, b, c);
  }
}

double angle_at(const Vec3& p, const Vec3& q, const Vec3& r) {
  const Vec3 a = q - p, b = r - p;
  return std::acos(a.normalized().dot(b.normalized()));
}

}  // namespace

TEST_CASE("rectangle measures, diameter and outward normals") {
  const Cell r = Cell::rectangle(2.0, 0.5);
  CHECK(r.dim() == 2);
  CHECK(r.face_count() == 4);
  CHECK(r.measure() == Approx(1.0));
  CHECK(r.diameter() == Approx(std::sqrt(4.25)));
  CHECK(measure(r, 0) == Approx(2.0));
  CHECK(measure(r, 1) == Approx(0.5));
  CHECK(boundary_measure(r) == Approx(5.0));
  const Vec3 n0 = outward_unit_normal(r, 0);
  CHECK(n0.x() == Approx(0.0).margin(1e-14));
  CHECK(n0.y() == Approx(-1.0));
  const Vec3 n1 = outward_unit_normal(r, 1);
  CHECK(n1.x() == Approx(1.0));
  CHECK(is_convex(r));
}

TEST_CASE("triangle and tetrahedron basics") {
  const Cell t = Cell::triangle(v2(0, 0), v2(1, 0), v2(0, 1));
  CHECK(t.measure() == Approx(0.5));
  CHECK(t.diameter() == Approx(std::sqrt(2.0)));
  CHECK(centroid(t).x() == Approx(1.0 / 3.0));

  const Cell tet = Cell::tetrahedron(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1));
  CHECK(tet.measure() == Approx(1.0 / 6.0));
  CHECK(tet.face_count() == 4);
  // face k is opposite vertex k; face 3 is the base z = 0
  CHECK(opposite_vertex(tet, 3).z() == Approx(1.0));
  CHECK(outward_unit_normal(tet, 3).z() == Approx(-1.0));
  CHECK(measure(tet, 0) == Approx(std::sqrt(3.0) / 2.0));
  double total = 0.0;
  for (int f = 0; f < 4; ++f) total += measure(tet, f);
  CHECK(boundary_measure(tet) == Approx(total));
}

TEST_CASE("box, prism and pyramid") {
  const Cell b = Cell::box(1.0, 0.8, 0.6);
  CHECK(b.kind() == CellKind::Prism);
  CHECK(b.measure() == Approx(0.48));
  CHECK(b.diameter() == Approx(std::sqrt(1.0 + 0.64 + 0.36)));
  CHECK(outward_unit_normal(b, 0).z() == Approx(-1.0));
  CHECK(outward_unit_normal(b, 1).z() == Approx(1.0));

  const Cell p = Cell::prism({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}, {1.0, 1.0, 1.0});
  CHECK(p.measure() == Approx(0.5));
  CHECK(p.face_count() == 5);

  const Cell pyr = Cell::pyramid(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0), Vec3(0.5, 0.5, 1));
  CHECK(pyr.measure() == Approx(1.0 / 3.0));
  CHECK(pyr.face_count() == 5);
  CHECK(measure(pyr, 0) == Approx(1.0));
  CHECK(is_convex(pyr));
}

TEST_CASE("nonconvex polygon is recognised") {
  const Cell l = Cell::polygon({v2(0, 0), v2(2, 0), v2(2, 1), v2(1, 1), v2(1, 2), v2(0, 2)});
  CHECK_FALSE(is_convex(l));
  CHECK(l.measure() == Approx(3.0));
  double area = 0.0;
  for (const auto& s : simplex_decomposition(l)) area += simplex_volume(s);
  CHECK(area == Approx(3.0));
}

TEST_CASE("degenerate cells are rejected") {
  CHECK_THROWS_AS(Cell::triangle(v2(0, 0), v2(1, 0), v2(2, 0)), Error);
  try {
    Cell::triangle(v2(0, 0), v2(1, 1), v2(2, 2));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateGeometry);
  }
  CHECK_THROWS_AS(Cell::tetrahedron(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)), Error);
}

TEST_CASE("curvilinear face keeps its path") {
  std::map<int, std::vector<Vec3>> curved;
  // bulge on the top edge of the unit square, from (1,1) to (0,1)
  curved[2] = {v2(1, 1), v2(0.5, 1.2), v2(0, 1)};
  const Cell c = Cell::polygon({v2(0, 0), v2(1, 0), v2(1, 1), v2(0, 1)}, curved);
  CHECK(c.face(2).kind == FaceKind::Curvilinear);
  CHECK(c.face(0).kind == FaceKind::Planar);
  CHECK(c.measure() > 1.0);
  CHECK(measure(c, 2) > 1.0);
}

TEST_CASE("macrocell faces are the outer faces of its children") {
  const Cell a = Cell::triangle(v2(0, 0), v2(1, 0), v2(1, 1));
  const Cell b = Cell::triangle(v2(0, 0), v2(1, 1), v2(0, 1));
  const Cell m = Cell::macrocell({a, b});
  CHECK(m.kind() == CellKind::Macrocell);
  CHECK(m.face_count() == 4);
  CHECK(m.measure() == Approx(1.0));
  CHECK(m.diameter() == Approx(std::sqrt(2.0)));
  for (int f = 0; f < m.face_count(); ++f) {
    const auto [child, cf] = m.face_owner(f);
    CHECK((child == 0 || child == 1));
    CHECK(measure(m.children()[child], cf) == Approx(1.0));
  }
}

TEST_CASE("Sigma from angles, from vertices and in vector form agree on random triangles") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Cell t = random_triangle(rng);
    const auto& v = t.vertices();
    for (int g = 0; g < 3; ++g) {
      const auto& fv = t.face(g).vertices;
      const Vec3 a = v[fv[0]], c = v[fv[1]], b = opposite_vertex(t, g);
      const double from_angles = sigma_alpha_beta(angle_at(a, b, c), angle_at(c, a, b));
      const double from_vertices = sigma_alpha_beta(a, b, c);
      const double vector_form = sigma_alpha_beta_vector_form(a, b, c);
      REQUIRE(from_vertices == Approx(from_angles).epsilon(1e-9));
      REQUIRE(vector_form == Approx(from_angles).epsilon(1e-9));
      REQUIRE(sigma_alpha_beta(t, g) == Approx(from_angles).epsilon(1e-9));
    }
  }
}

TEST_CASE("Sigma of the equilateral triangle is 10/3") {
  const double a = std::numbers::pi / 3;
  CHECK(sigma_alpha_beta(a, a) == Approx(10.0 / 3.0));
  // right angle and 45 degrees: 0 + 1 - 0 + 3
  CHECK(sigma_alpha_beta(std::numbers::pi / 2, std::numbers::pi / 4) == Approx(4.0));
}

TEST_CASE("geometry is invariant under rigid motions and scales with h") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(0.0, 2 * std::numbers::pi), sh(-5.0, 5.0), sc(0.1, 10.0);
  for (int i = 0; i < 200; ++i) {
    const Cell t = random_triangle(rng);
    const Cell m = moved_polygon(t, ang(rng), v2(sh(rng), sh(rng)));
    REQUIRE(m.diameter() == Approx(t.diameter()).epsilon(1e-12));
    REQUIRE(m.measure() == Approx(t.measure()).epsilon(1e-10));
    for (int g = 0; g < 3; ++g) REQUIRE(sigma_alpha_beta(m, g) == Approx(sigma_alpha_beta(t, g)).epsilon(1e-8));
    const double s = sc(rng);
    std::vector<Vec3> pts;
    for (const auto& p : t.vertices()) pts.push_back(s * p);
    const Cell big = Cell::polygon(pts);
    REQUIRE(big.diameter() == Approx(s * t.diameter()).epsilon(1e-12));
    REQUIRE(big.measure() == Approx(s * s * t.measure()).epsilon(1e-10));
    for (int g = 0; g < 3; ++g) REQUIRE(sigma_alpha_beta(big, g) == Approx(sigma_alpha_beta(t, g)).epsilon(1e-8));
  }
}

TEST_CASE("normal systems and the smallest eigenvalue of T") {
  const Cell sq = Cell::rectangle(1.0, 1.0);
  const std::vector<int> faces{0, 1};
  const NormalSystem ns = normal_system(sq, faces);
  CHECK(std::abs(ns.det) == Approx(1.0));
  CHECK(t_matrix(ns).lambda_min == Approx(1.0));

  const std::vector<int> parallel{0, 2};
  try {
    normal_system(sq, parallel);
    FAIL("expected dependent normals");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DependentNormals);
  }
  const std::vector<int> one{0};
  CHECK_THROWS_AS(normal_system(sq, one), Error);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, std::numbers::pi - 0.05);
  for (int i = 0; i < 1000; ++i) {
    const double b = u(rng);
    Eigen::MatrixXd rows(2, 2);
    rows << 1.0, 0.0, std::cos(b), std::sin(b);
    const NormalSystem s = normal_system_from_rows(rows);
    const double closed = t_matrix(s).lambda_min;
    const double jac = jacobi_eigenvalues(s.normals.transpose() * s.normals)[0];
    REQUIRE(closed == Approx(jac).margin(1e-12));
    REQUIRE(closed == Approx(1.0 - std::abs(std::cos(b))).margin(1e-12));
  }
}

TEST_CASE("Jacobi eigenvalues match Eigen on random symmetric matrices") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int i = 0; i < 200; ++i) {
    Eigen::Matrix3d a;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) a(r, c) = n(rng);
    }
    a = (a + a.transpose()).eval();
    const Eigen::VectorXd ours = jacobi_eigenvalues(a);
    const Eigen::Vector3d ref = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(a).eigenvalues();
    for (int k = 0; k < 3; ++k) REQUIRE(ours[k] == Approx(ref[k]).margin(1e-10));
  }
}

TEST_CASE("quadrature is exact for low-degree polynomials") {
  const Simplex tri{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  CHECK(integrate(tri, [](const Vec3& x) { return x.x() * x.x(); }, 6) == Approx(1.0 / 12.0));
  CHECK(integrate(tri, [](const Vec3& x) { return x.x() * x.y(); }, 6) == Approx(1.0 / 24.0));
  const Simplex tet{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  CHECK(integrate(tet, [](const Vec3&) { return 1.0; }, 6) == Approx(1.0 / 6.0));
  CHECK(integrate(tet, [](const Vec3& x) { return x.z() * x.z(); }, 6) == Approx(1.0 / 60.0));
  const Simplex seg{Vec3(0, 0, 0), Vec3(2, 0, 0)};
  CHECK(integrate(seg, [](const Vec3& x) { return x.x() * x.x() * x.x(); }, 7) == Approx(4.0));
}

TEST_CASE("cell kind names round trip") {
  for (auto k : {CellKind::Triangle, CellKind::Quadrilateral, CellKind::Tetrahedron, CellKind::Pyramid,
                 CellKind::Prism, CellKind::GenericPolytope, CellKind::Macrocell}) {
    REQUIRE(parse_cell_kind(to_string(k)) == k);
  }
  CHECK_FALSE(parse_cell_kind("Hexagon").has_value());
}
