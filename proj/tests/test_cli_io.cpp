#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "poincare/cell_io.hpp"
#include "poincare/fields.hpp"
#include "poincare/reproduce.hpp"

using namespace poincare;
using Catch::Approx;

#ifndef POINCARE_SAMPLES_DIR
#define POINCARE_SAMPLES_DIR "samples"
#endif

namespace {

Vec3 v2(double x, double y) { return Vec3(x, y, 0.0); }

std::string sample(const std::string& name) { return std::string(POINCARE_SAMPLES_DIR) + "/" + name; }

// Parse error message for a document, or "" if it parses.
std::string parse_error(const std::string& text) {
  try {
    parse_cell(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    return e.what();
  }
  return {};
}

std::string mesh_error(const std::string& text) {
  try {
    parse_mesh(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    return e.what();
  }
  return {};
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("cells survive a write/read round trip") {
  std::map<int, std::vector<Vec3>> curved;
  curved[1] = {v2(1, 0), v2(1.1, 0.5), v2(1, 1)};
  std::vector<Cell> cells{
      detail::unit_right_triangle(),
      Cell::quadrilateral(v2(0.1, 0.2), v2(1.3, 0.1), v2(1.1, 0.9), v2(0.0, 1.0 / 3.0)),
      Cell::polygon({v2(0, 0), v2(2, 0), v2(2.5, 1), v2(1, 2), v2(-0.5, 1)}),
      Cell::polygon({v2(0, 0), v2(1, 0), v2(1, 1), v2(0, 1)}, curved),
      detail::right_tetrahedron(),
      detail::equilateral_tetrahedron(0.7),
      Cell::pyramid(v2(0, 0), v2(1, 0), v2(1, 1), v2(0, 1), Vec3(0.4, 0.6, 0.9)),
      Cell::prism({v2(0, 0), v2(1, 0), v2(0, 1)}, {1.0, 1.5, 2.0}, 0.25),
      Cell::box(1.0, 0.8, 0.6),
      Cell::macrocell({Cell::triangle(v2(0, 0), v2(1, 0), v2(1, 1)), Cell::triangle(v2(0, 0), v2(1, 1), v2(0, 1))}),
  };
  for (const auto& c : cells) {
    const std::string text = serialize_cell(c, {0});
    const CellDocument doc = parse_cell(text);
    INFO(text);
    REQUIRE(same_cell(c, doc.cell));
    REQUIRE(doc.gamma == std::vector<int>{0});
    REQUIRE(serialize_cell(doc.cell, doc.gamma) == text);
  }
}

TEST_CASE("random cells round trip bit for bit") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    const Cell t = detail::random_triangle(rng);
    REQUIRE(same_cell(t, parse_cell(serialize_cell(t)).cell));
    const Cell tet = detail::random_tetrahedron(rng);
    REQUIRE(same_cell(tet, parse_cell(serialize_cell(tet)).cell));
  }
}

TEST_CASE("cell parse errors name the line") {
  CHECK(contains(parse_error("DIM 2\nKIND Triangle\nVERTICES 3\n0 0\n1 0\n"), "unexpected end"));
  CHECK(contains(parse_error("DIM 4\n"), "line 1: DIM must be 2 or 3"));
  CHECK(contains(parse_error("DIM 2\nKIND Hexagon\n"), "line 2: unknown cell kind"));
  CHECK(contains(parse_error("# comment\n\nDIM 2\nKIND Triangle\nVERTICES 3\n0 0\n1 x\n0 1\n"), "line 7: bad number"));
  CHECK(contains(parse_error("DIM 2\nKIND Triangle\nVERTICES 3\n0 0\n1 0\n0 1\nGAMMA 3\n"), "GAMMA face 3 out of range"));
  CHECK(contains(parse_error("DIM 2\nKIND Triangle\nVERTICES 3\n0 0\n1 0\n0 1\nCOLOR red\n"), "line 7: unknown section"));
  CHECK(contains(parse_error("KIND Triangle\nVERTICES 3\n0 0\n1 0\n0 1\n"), "DIM must precede VERTICES"));
  CHECK(contains(parse_error("DIM 3\nKIND Prism\nVERTICES 3\n0 0 0\n1 0 0\n0 1 0.5\nHEIGHTS 3\n1 1 1\n"), "share one z"));
  CHECK(contains(parse_error("DIM 3\nKIND GenericPolytope\nVERTICES 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n"), "needs FACES"));
  CHECK(contains(parse_error("DIM 2\nKIND Triangle\nVERTICES 4\n0 0\n1 0\n0 1\n1 1\n"), "Triangle needs 3 vertices"));
  CHECK(parse_error("DIM 2\nKIND Triangle # inline comment\nVERTICES 3\n0 0\n1 0\n0 1\n").empty());
}

TEST_CASE("degenerate geometry in a file keeps its own error kind") {
  try {
    parse_cell("DIM 2\nKIND Triangle\nVERTICES 3\n0 0\n1 0\n2 0\n");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateGeometry);
  }
}

TEST_CASE("meshes round trip with values") {
  const Mesh m = uniform_rectangle_mesh(3, 2, 1.5, 1.0);
  MeshValues vals;
  vals.per_cell = true;
  vals.components = 2;
  for (std::size_t i = 0; i < m.size(); ++i) vals.rows.push_back({0.1 * i, -1.0 / (i + 1)});
  const std::string text = serialize_mesh(m, vals);
  const MeshDocument doc = parse_mesh(text);
  REQUIRE(same_mesh(m, doc.mesh));
  REQUIRE(doc.values.has_value());
  CHECK(doc.values->per_cell);
  CHECK(doc.values->rows == vals.rows);
  CHECK(serialize_mesh(doc.mesh, doc.values) == text);
  CHECK(same_mesh(m, parse_mesh(serialize_mesh(m)).mesh));
}

TEST_CASE("mesh parse errors") {
  CHECK(contains(mesh_error("DIM 2\nVERTICES 3\n0 0\n1 0\n0 1\n"), "missing CELLS"));
  CHECK(contains(mesh_error("DIM 2\nVERTICES 3\n0 0\n1 0\n0 1\nCELLS 1\nTriangle 0 1 5\n"), "line 7: cell vertex index 5"));
  CHECK(contains(mesh_error("DIM 2\nVERTICES 3\n0 0\n1 0\n0 1\nCELLS 1\nBlob 0 1 2\n"), "unknown cell kind"));
  CHECK(contains(mesh_error("DIM 2\nVALUES cell 1\n"), "VALUES cell must follow CELLS"));
  CHECK(contains(mesh_error("DIM 2\nVERTICES 3\n0 0\n1 0\n0 1\nCELLS 1\nTriangle 0 1 2\nVALUES vertex 1\n1\n2 3\n3\n"),
                 "line 10: VALUES row has the wrong width"));
}

TEST_CASE("sample files parse") {
  for (const char* name : {"unit_square.cell", "right_triangle.cell", "rectangle.cell", "tetrahedron.cell", "prism.cell",
                           "box.cell", "macro_square.cell"}) {
    INFO(name);
    const CellDocument doc = parse_cell(read_file(sample(name)));
    CHECK(doc.cell.measure() > 0.0);
  }
  const MeshDocument mesh = parse_mesh(read_file(sample("square_4x4.mesh")));
  CHECK(mesh.mesh.size() == 16);
  const MeshDocument nodal = parse_mesh(read_file(sample("square_4x4_nodal.mesh")));
  REQUIRE(nodal.values.has_value());
  CHECK_FALSE(nodal.values->per_cell);
  CHECK_THROWS_AS(read_file(sample("missing.cell")), Error);
}

TEST_CASE("nodal fields interpolate vertex values linearly") {
  const Mesh m = uniform_rectangle_mesh(2, 2, 1.0, 1.0);
  MeshValues vals;
  vals.components = 2;
  for (const auto& p : m.vertices()) vals.rows.push_back({2.0 * p.x() - p.y() + 1.0, 0.5 * p.y()});
  const NodalField f(m, vals);
  CHECK(f.components() == 2);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Vec3 x = v2(u(rng), u(rng));
    const Vec3 val = f.value(x);
    REQUIRE(val[0] == Approx(2.0 * x.x() - x.y() + 1.0));
    REQUIRE(val[1] == Approx(0.5 * x.y()));
    const Eigen::Matrix3d j = f.jacobian(x);
    REQUIRE(j(0, 0) == Approx(2.0));
    REQUIRE(j(0, 1) == Approx(-1.0));
    REQUIRE(j(1, 1) == Approx(0.5));
  }
  CHECK_THROWS_AS(f.value(v2(1.5, 0.5)), Error);
  MeshValues per_cell;
  per_cell.per_cell = true;
  per_cell.rows.assign(m.size(), {1.0});
  CHECK_THROWS_AS(NodalField(m, per_cell), Error);
}

TEST_CASE("field identifiers and their derivatives") {
  const ScalarField f = parse_scalar_field("2*x^2*y - 3*z + 0.5");
  CHECK(f.degree == 3);
  const Vec3 p(0.3, -0.7, 1.1);
  CHECK(f.value(p) == Approx(2 * 0.09 * -0.7 - 3.3 + 0.5));
  CHECK(f.gradient(p).x() == Approx(4 * 0.3 * -0.7));
  CHECK(f.gradient(p).y() == Approx(2 * 0.09));
  CHECK(f.gradient(p).z() == Approx(-3.0));

  const ScalarField t = parse_scalar_field("sin(pi*x)*cos(2*pi*y)");
  CHECK(t.degree == -1);
  const double pi = std::numbers::pi;
  CHECK(t.gradient(p).x() == Approx(pi * std::cos(pi * 0.3) * std::cos(2 * pi * -0.7)));
  CHECK(t.gradient(p).y() == Approx(-2 * pi * std::sin(pi * 0.3) * std::sin(2 * pi * -0.7)));

  const VectorField v = parse_vector_field("[x*y, y^2, -z]");
  CHECK(v.components == 3);
  const Eigen::Matrix3d j = v.jacobian(p);
  CHECK(j(0, 0) == Approx(-0.7));
  CHECK(j(0, 1) == Approx(0.3));
  CHECK(j(1, 1) == Approx(-1.4));
  CHECK(j(2, 2) == Approx(-1.0));
}

TEST_CASE("random polynomial gradients match finite differences") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const ScalarField f = parse_scalar_field(detail::random_polynomial(rng, 3));
    REQUIRE(f.degree >= 1);
    REQUIRE(f.degree <= 3);
    const Vec3 p(u(rng), u(rng), u(rng));
    const double h = 1e-5;
    for (int k = 0; k < 3; ++k) {
      Vec3 e = Vec3::Zero();
      e[k] = h;
      const double fd = (f.value(p + e) - f.value(p - e)) / (2 * h);
      REQUIRE(f.gradient(p)[k] == Approx(fd).margin(1e-7));
    }
  }
}

TEST_CASE("unknown fields are rejected") {
  for (const char* bad : {"tan(x)", "x^4", "x^2*y^2", "sin(x)", "x +", "[x]", "[x,y", "2**x", "w"}) {
    INFO(bad);
    bool threw = false;
    try {
      if (bad[0] == '[') parse_vector_field(bad);
      else parse_scalar_field(bad);
    } catch (const Error& e) {
      threw = e.kind() == ErrorKind::UnknownField;
    }
    CHECK(threw);
  }
}
