#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "poincare/error.hpp"

namespace poincare {

using Vec3 = Eigen::Vector3d;

/// Coplanarity / collinearity / unit-norm tolerance, relative to the cell diameter.
inline constexpr double kGeometryTolerance = 1e-9;
/// |det N| at or below this value means the selected normals are dependent.
inline constexpr double kDetTolerance = 1e-9;

enum class FaceKind { Planar, Curvilinear };

/// A face of a cell.  `vertices` index the owning cell's vertex array; in 2D a
/// face is a pair of consecutive boundary vertices.  Curvilinear faces carry a
/// piecewise-flat approximation: an ordered polyline `path` from vertices[0]
/// to vertices[1] (2D) or a list of sub-triangles `patches` (3D).
struct Face {
  std::vector<int> vertices;
  FaceKind kind = FaceKind::Planar;
  std::vector<Vec3> path;
  std::vector<std::array<Vec3, 3>> patches;
};

enum class CellKind { Triangle, Quadrilateral, Tetrahedron, Pyramid, Prism, GenericPolytope, Macrocell };

inline std::string to_string(CellKind kind) {
  switch (kind) {
    case CellKind::Triangle: return "Triangle";
    case CellKind::Quadrilateral: return "Quadrilateral";
    case CellKind::Tetrahedron: return "Tetrahedron";
    case CellKind::Pyramid: return "Pyramid";
    case CellKind::Prism: return "Prism";
    case CellKind::GenericPolytope: return "GenericPolytope";
    case CellKind::Macrocell: return "Macrocell";
  }
  return "Unknown";
}

inline std::optional<CellKind> parse_cell_kind(const std::string& name) {
  for (auto kind : {CellKind::Triangle, CellKind::Quadrilateral, CellKind::Tetrahedron, CellKind::Pyramid,
                    CellKind::Prism, CellKind::GenericPolytope, CellKind::Macrocell}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

/// An outward-oriented piece of the cell boundary: a segment (2D) or a
/// triangle (3D), tagged with the cell face it belongs to.
struct BoundaryFacet {
  std::vector<Vec3> points;
  int face = -1;
};

/// A simplex given by its d+1 vertices.
using Simplex = std::vector<Vec3>;

namespace detail {

inline double simplex_measure(const Simplex& s) {
  if (s.size() == 3) return 0.5 * std::abs((s[1] - s[0]).cross(s[2] - s[0]).z());
  if (s.size() == 4) return std::abs((s[1] - s[0]).dot((s[2] - s[0]).cross(s[3] - s[0]))) / 6.0;
  if (s.size() == 2) return (s[1] - s[0]).norm();
  return 0.0;
}

/// Signed measure; positive for counter-clockwise triangles and right-handed tetrahedra.
inline double simplex_signed_measure(const Simplex& s) {
  if (s.size() == 3) return 0.5 * (s[1] - s[0]).cross(s[2] - s[0]).z();
  return (s[1] - s[0]).dot((s[2] - s[0]).cross(s[3] - s[0])) / 6.0;
}

/// Unnormalized outward normal of a boundary facet; its length is the facet measure.
inline Vec3 facet_area_normal(const BoundaryFacet& f) {
  if (f.points.size() == 2) {
    const Vec3 t = f.points[1] - f.points[0];
    return Vec3(t.y(), -t.x(), 0.0);
  }
  return 0.5 * (f.points[1] - f.points[0]).cross(f.points[2] - f.points[0]);
}

inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

inline bool point_in_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c, double tol) {
  const Vec3 n = (b - a).cross(c - a);
  const double area2 = n.norm();
  if (area2 == 0.0) return false;
  const Vec3 un = n / area2;
  if (std::abs((p - a).dot(un)) > tol) return false;
  // Barycentric coordinates via sub-areas; edge tolerance measured in length.
  const double scale = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
  const double l0 = (b - p).cross(c - p).dot(un) / area2;
  const double l1 = (c - p).cross(a - p).dot(un) / area2;
  const double l2 = (a - p).cross(b - p).dot(un) / area2;
  const double btol = tol / std::max(scale, 1e-300) * 2.0;
  return l0 >= -btol && l1 >= -btol && l2 >= -btol;
}

/// Ear clipping of a simple counter-clockwise polygon.
inline std::vector<std::array<int, 3>> ear_clip(const std::vector<Vec3>& poly) {
  std::vector<int> idx(poly.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::array<int, 3>> tris;
  auto cross_z = [&](int a, int b, int c) { return (poly[b] - poly[a]).cross(poly[c] - poly[a]).z(); };
  std::size_t guard = 0;
  while (idx.size() > 3) {
    bool clipped = false;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const int a = idx[(k + idx.size() - 1) % idx.size()];
      const int b = idx[k];
      const int c = idx[(k + 1) % idx.size()];
      if (cross_z(a, b, c) <= 0.0) continue;
      bool contains = false;
      for (int q : idx) {
        if (q == a || q == b || q == c) continue;
        if (cross_z(a, b, q) >= 0.0 && cross_z(b, c, q) >= 0.0 && cross_z(c, a, q) >= 0.0) {
          contains = true;
          break;
        }
      }
      if (contains) continue;
      tris.push_back({a, b, c});
      idx.erase(idx.begin() + static_cast<long>(k));
      clipped = true;
      break;
    }
    if (!clipped || ++guard > poly.size() * poly.size()) {
      throw Error(ErrorKind::DegenerateGeometry, "polygon could not be triangulated (self-intersecting?)");
    }
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

inline std::vector<Vec3> sorted_points(std::vector<Vec3> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec3& a, const Vec3& b) {
    return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
  });
  return pts;
}

struct Vec3Less {
  bool operator()(const Vec3& a, const Vec3& b) const {
    return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
  }
};

}  // namespace detail

/// A bounded 2D or 3D mesh cell.  Immutable once built; every factory validates
/// the geometry and throws `Error` on violation.
class Cell {
 public:
  // ---- factories -------------------------------------------------------

  /// Polygon with vertices in boundary order (either orientation).  Face i
  /// joins vertex i and vertex i+1.  `curved` maps a face index to a polyline
  /// (endpoints included) that replaces the straight edge.
  static Cell polygon(std::vector<Vec3> vertices, std::map<int, std::vector<Vec3>> curved = {},
                      std::optional<CellKind> kind = std::nullopt) {
    Cell c;
    c.dim_ = 2;
    c.vertices_ = std::move(vertices);
    const int n = static_cast<int>(c.vertices_.size());
    if (n < 3) throw Error(ErrorKind::DegenerateGeometry, "polygon needs at least 3 vertices");
    c.kind_ = kind.value_or(n == 3 ? CellKind::Triangle : n == 4 ? CellKind::Quadrilateral : CellKind::GenericPolytope);
    for (int i = 0; i < n; ++i) {
      Face f;
      f.vertices = {i, (i + 1) % n};
      if (auto it = curved.find(i); it != curved.end()) {
        f.kind = FaceKind::Curvilinear;
        f.path = it->second;
      }
      c.faces_.push_back(std::move(f));
    }
    c.finalize();
    return c;
  }

  static Cell triangle(const Vec3& a, const Vec3& b, const Vec3& c) { return polygon({a, b, c}); }

  static Cell quadrilateral(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    return polygon({a, b, c, d});
  }

  static Cell rectangle(double h1, double h2) {
    return polygon({Vec3(0, 0, 0), Vec3(h1, 0, 0), Vec3(h1, h2, 0), Vec3(0, h2, 0)});
  }

  /// Tetrahedron; face k is the face opposite vertex k.
  static Cell tetrahedron(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    Cell cell;
    cell.dim_ = 3;
    cell.kind_ = CellKind::Tetrahedron;
    cell.vertices_ = {a, b, c, d};
    cell.faces_ = {Face{{1, 2, 3}}, Face{{0, 3, 2}}, Face{{0, 1, 3}}, Face{{0, 2, 1}}};
    cell.finalize();
    return cell;
  }

  /// Pyramid with quadrilateral base ABCD (face 0) and apex O; faces 1..4 are
  /// OAB, OBC, OCD, ODA.  The canonical split is into tetrahedra OABC and OACD.
  static Cell pyramid(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, const Vec3& apex) {
    Cell cell;
    cell.dim_ = 3;
    cell.kind_ = CellKind::Pyramid;
    cell.vertices_ = {a, b, c, d, apex};
    cell.faces_ = {Face{{0, 3, 2, 1}}, Face{{4, 0, 1}}, Face{{4, 1, 2}}, Face{{4, 2, 3}}, Face{{4, 3, 0}}};
    cell.finalize();
    return cell;
  }

  /// Prism {(x1,x2) in base, z0 <= x3 <= z0 + H(x1,x2)} with H piecewise linear
  /// over a fan triangulation of the base from its vertex 0.  Face 0 is the
  /// base (x3 = z0), face 1 the top, faces 2.. the vertical sides.
  static Cell prism(const std::vector<Vec3>& base, const std::vector<double>& heights, double z0 = 0.0) {
    const int n = static_cast<int>(base.size());
    if (n < 3 || static_cast<int>(heights.size()) != n) {
      throw Error(ErrorKind::DegenerateGeometry, "prism needs >= 3 base vertices and one height per vertex");
    }
    for (double h : heights) {
      if (!(h > 0.0)) throw Error(ErrorKind::Precondition, "prism heights must be positive (H_min > 0)");
    }
    Cell cell;
    cell.dim_ = 3;
    cell.kind_ = CellKind::Prism;
    cell.heights_ = heights;
    for (const auto& p : base) cell.vertices_.push_back(Vec3(p.x(), p.y(), z0));
    for (int i = 0; i < n; ++i) cell.vertices_.push_back(Vec3(base[i].x(), base[i].y(), z0 + heights[i]));
    Face bottom, top;
    for (int i = 0; i < n; ++i) {
      bottom.vertices.push_back(i);
      top.vertices.push_back(n + i);
    }
    const bool flat_top = std::all_of(heights.begin(), heights.end(), [&](double h) {
      return std::abs(h - heights[0]) <= kGeometryTolerance * std::max(1.0, std::abs(heights[0]));
    });
    if (!flat_top) {
      top.kind = FaceKind::Curvilinear;
      for (int i = 1; i + 1 < n; ++i) {
        top.patches.push_back({cell.vertices_[n], cell.vertices_[n + i], cell.vertices_[n + i + 1]});
      }
    }
    cell.faces_.push_back(std::move(bottom));
    cell.faces_.push_back(std::move(top));
    for (int i = 0; i < n; ++i) {
      const int j = (i + 1) % n;
      cell.faces_.push_back(Face{{i, j, n + j, n + i}});
    }
    cell.finalize();
    return cell;
  }

  /// Box (0,h1) x (0,h2) x (0,h3) as a prism of constant height h3.
  static Cell box(double h1, double h2, double h3) {
    return prism({Vec3(0, 0, 0), Vec3(h1, 0, 0), Vec3(h1, h2, 0), Vec3(0, h2, 0)}, {h3, h3, h3, h3});
  }

  /// General 3D polytope from vertices and face loops (any consistent or
  /// inconsistent orientation; loops are re-oriented outward).
  static Cell polytope(std::vector<Vec3> vertices, std::vector<Face> faces,
                       CellKind kind = CellKind::GenericPolytope) {
    Cell cell;
    cell.dim_ = 3;
    cell.kind_ = kind;
    cell.vertices_ = std::move(vertices);
    cell.faces_ = std::move(faces);
    cell.finalize();
    return cell;
  }

  /// Cell composed of children glued along whole faces.  The macrocell's faces
  /// are the children's unshared faces; `face_owner(i)` names the child and
  /// child face that carry macro face i.
  static Cell macrocell(std::vector<Cell> children) {
    if (children.empty()) throw Error(ErrorKind::DegenerateGeometry, "macrocell needs at least one child");
    Cell cell;
    cell.kind_ = CellKind::Macrocell;
    cell.dim_ = children.front().dim();
    for (const auto& ch : children) {
      if (ch.dim() != cell.dim_) throw Error(ErrorKind::DegenerateGeometry, "macrocell children differ in dimension");
    }
    std::map<Vec3, int, detail::Vec3Less> index;
    auto vid = [&](const Vec3& p) {
      auto [it, inserted] = index.emplace(p, static_cast<int>(cell.vertices_.size()));
      if (inserted) cell.vertices_.push_back(p);
      return it->second;
    };
    // Group child faces by their corner point sets.
    std::map<std::vector<int>, std::vector<std::pair<int, int>>> by_corners;
    for (int ci = 0; ci < static_cast<int>(children.size()); ++ci) {
      const auto& ch = children[ci];
      for (int fi = 0; fi < static_cast<int>(ch.faces().size()); ++fi) {
        std::vector<int> key;
        for (int v : ch.faces()[fi].vertices) key.push_back(vid(ch.vertices()[v]));
        std::sort(key.begin(), key.end());
        by_corners[key].emplace_back(ci, fi);
      }
    }
    std::vector<std::pair<int, int>> owners;
    for (const auto& [key, users] : by_corners) {
      if (users.size() > 2) throw Error(ErrorKind::DegenerateGeometry, "a face is shared by more than two children");
      if (users.size() == 1) owners.push_back(users.front());
    }
    std::sort(owners.begin(), owners.end());
    for (auto [ci, fi] : owners) {
      const auto& ch = children[ci];
      Face f = ch.faces()[fi];
      for (int& v : f.vertices) v = vid(ch.vertices()[v]);
      cell.faces_.push_back(std::move(f));
      cell.owners_.emplace_back(ci, fi);
      for (const auto& bf : ch.boundary_facets()) {
        if (bf.face == fi) cell.facets_.push_back(BoundaryFacet{bf.points, static_cast<int>(cell.faces_.size()) - 1});
      }
    }
    cell.children_ = std::move(children);
    cell.finalize_macro();
    return cell;
  }

  // ---- accessors -------------------------------------------------------

  int dim() const { return dim_; }
  CellKind kind() const { return kind_; }
  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  const Face& face(int i) const {
    if (i < 0 || i >= static_cast<int>(faces_.size())) {
      throw Error(ErrorKind::InvalidFaceSelection, "face index " + std::to_string(i) + " out of range");
    }
    return faces_[i];
  }
  int face_count() const { return static_cast<int>(faces_.size()); }
  const std::vector<Cell>& children() const { return children_; }
  const std::vector<double>& heights() const { return heights_; }
  /// (child index, child face index) carrying macro face i.
  std::pair<int, int> face_owner(int i) const { return owners_.at(i); }
  const std::vector<BoundaryFacet>& boundary_facets() const { return facets_; }

  /// Boundary traversal in counter-clockwise order (2D only), including the
  /// interior points of curvilinear faces.
  const std::vector<Vec3>& boundary_polygon() const { return polygon_; }

  double diameter() const { return diameter_; }
  double measure() const { return measure_; }

 private:
  Cell() = default;

  std::vector<Vec3> all_points() const {
    std::vector<Vec3> pts = vertices_;
    for (const auto& f : facets_) pts.insert(pts.end(), f.points.begin(), f.points.end());
    return pts;
  }

  void compute_diameter() {
    const auto pts = all_points();
    double d = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, (pts[i] - pts[j]).norm());
    }
    if (!(d > 0.0) || !std::isfinite(d)) throw Error(ErrorKind::DegenerateGeometry, "cell has zero diameter");
    diameter_ = d;
  }

  void check_finite() const {
    for (const auto& p : vertices_) {
      if (!p.allFinite()) throw Error(ErrorKind::DegenerateGeometry, "non-finite vertex coordinate");
      if (dim_ == 2 && p.z() != 0.0) throw Error(ErrorKind::DegenerateGeometry, "2D vertices must have z = 0");
    }
  }

  void finalize() {
    check_finite();
    for (const auto& f : faces_) {
      for (int v : f.vertices) {
        if (v < 0 || v >= static_cast<int>(vertices_.size())) {
          throw Error(ErrorKind::DegenerateGeometry, "face vertex index out of range");
        }
      }
    }
    if (dim_ == 2) finalize_2d();
    else finalize_3d();
    compute_diameter();
    const double tol = kGeometryTolerance * diameter_;
    if (!(measure_ > tol * diameter_ * (dim_ == 3 ? diameter_ : 1.0))) {
      throw Error(ErrorKind::DegenerateGeometry, "cell has non-positive measure");
    }
    if (dim_ == 3) check_planarity(tol);
  }

  void finalize_2d() {
    const int n = static_cast<int>(vertices_.size());
    if (static_cast<int>(faces_.size()) != n) throw Error(ErrorKind::DegenerateGeometry, "polygon face count mismatch");
    // Effective boundary in the given vertex order.
    std::vector<Vec3> loop;
    std::vector<int> loop_face;
    for (int i = 0; i < n; ++i) {
      const Face& f = faces_[i];
      if (f.vertices.size() != 2 || f.vertices[0] != i || f.vertices[1] != (i + 1) % n) {
        throw Error(ErrorKind::DegenerateGeometry, "2D face " + std::to_string(i) + " must join consecutive vertices");
      }
      loop.push_back(vertices_[i]);
      loop_face.push_back(i);
      if (f.kind == FaceKind::Curvilinear) {
        if (f.path.size() < 2 || (f.path.front() - vertices_[i]).norm() > 0.0 ||
            (f.path.back() - vertices_[(i + 1) % n]).norm() > 0.0) {
          throw Error(ErrorKind::CurvilinearFace, "curved face path must start and end at the face vertices");
        }
        for (std::size_t k = 1; k + 1 < f.path.size(); ++k) {
          if (f.path[k].z() != 0.0) throw Error(ErrorKind::DegenerateGeometry, "2D path points must have z = 0");
          loop.push_back(f.path[k]);
          loop_face.push_back(i);
        }
      }
    }
    double area2 = 0.0;
    for (std::size_t k = 0; k < loop.size(); ++k) {
      const Vec3& p = loop[k];
      const Vec3& q = loop[(k + 1) % loop.size()];
      area2 += p.x() * q.y() - q.x() * p.y();
    }
    const bool ccw = area2 > 0.0;
    measure_ = 0.5 * std::abs(area2);
    for (std::size_t k = 0; k < loop.size(); ++k) {
      const Vec3& p = loop[k];
      const Vec3& q = loop[(k + 1) % loop.size()];
      facets_.push_back(BoundaryFacet{ccw ? std::vector<Vec3>{p, q} : std::vector<Vec3>{q, p}, loop_face[k]});
    }
    polygon_ = loop;
    if (!ccw) std::reverse(polygon_.begin(), polygon_.end());
  }

  void finalize_3d() {
    const int nf = static_cast<int>(faces_.size());
    if (nf < 4) throw Error(ErrorKind::DegenerateGeometry, "polytope needs at least 4 faces");
    using Edge = std::pair<int, int>;
    std::map<Edge, std::vector<int>> edge_faces;
    for (int fi = 0; fi < nf; ++fi) {
      const auto& v = faces_[fi].vertices;
      if (v.size() < 3) throw Error(ErrorKind::DegenerateGeometry, "3D face needs at least 3 vertices");
      for (std::size_t k = 0; k < v.size(); ++k) {
        const int a = v[k], b = v[(k + 1) % v.size()];
        edge_faces[{std::min(a, b), std::max(a, b)}].push_back(fi);
      }
    }
    for (const auto& [e, fs] : edge_faces) {
      if (fs.size() != 2) throw Error(ErrorKind::DegenerateGeometry, "face loops do not close the boundary");
    }
    // Orient loops consistently: neighbours traverse a shared edge in opposite directions.
    auto has_directed = [&](int fi, int a, int b) {
      const auto& v = faces_[fi].vertices;
      for (std::size_t k = 0; k < v.size(); ++k) {
        if (v[k] == a && v[(k + 1) % v.size()] == b) return true;
      }
      return false;
    };
    std::vector<int> state(nf, 0);
    for (int seed = 0; seed < nf; ++seed) {
      if (state[seed]) continue;
      state[seed] = 1;
      std::queue<int> q;
      q.push(seed);
      while (!q.empty()) {
        const int fi = q.front();
        q.pop();
        const auto v = faces_[fi].vertices;
        for (std::size_t k = 0; k < v.size(); ++k) {
          const int a = v[k], b = v[(k + 1) % v.size()];
          for (int nb : edge_faces[{std::min(a, b), std::max(a, b)}]) {
            if (nb == fi) continue;
            if (!state[nb]) {
              if (has_directed(nb, a, b)) std::reverse(faces_[nb].vertices.begin(), faces_[nb].vertices.end());
              state[nb] = 1;
              q.push(nb);
            } else if (has_directed(nb, a, b)) {
              throw Error(ErrorKind::DegenerateGeometry, "boundary is not orientable");
            }
          }
        }
      }
    }
    build_facets_3d();
    double vol = 0.0;
    for (const auto& f : facets_) vol += f.points[0].dot(f.points[1].cross(f.points[2])) / 6.0;
    if (vol < 0.0) {
      for (auto& f : faces_) std::reverse(f.vertices.begin(), f.vertices.end());
      build_facets_3d();
      vol = -vol;
    }
    measure_ = vol;
  }

  static Vec3 newell_normal(const std::vector<Vec3>& loop) {
    Vec3 n = Vec3::Zero();
    for (std::size_t k = 0; k < loop.size(); ++k) n += loop[k].cross(loop[(k + 1) % loop.size()]);
    return 0.5 * n;
  }

  void build_facets_3d() {
    facets_.clear();
    for (int fi = 0; fi < static_cast<int>(faces_.size()); ++fi) {
      const Face& f = faces_[fi];
      std::vector<Vec3> loop;
      for (int v : f.vertices) loop.push_back(vertices_[v]);
      if (f.kind == FaceKind::Curvilinear) {
        if (f.patches.empty()) throw Error(ErrorKind::CurvilinearFace, "curvilinear 3D face without patches");
        const Vec3 ref = newell_normal(loop);
        for (const auto& t : f.patches) {
          const Vec3 n = (t[1] - t[0]).cross(t[2] - t[0]);
          if (n.dot(ref) >= 0.0) facets_.push_back(BoundaryFacet{{t[0], t[1], t[2]}, fi});
          else facets_.push_back(BoundaryFacet{{t[0], t[2], t[1]}, fi});
        }
      } else {
        for (std::size_t k = 1; k + 1 < loop.size(); ++k) {
          facets_.push_back(BoundaryFacet{{loop[0], loop[k], loop[k + 1]}, fi});
        }
      }
    }
  }

  void check_planarity(double tol) const {
    for (int fi = 0; fi < static_cast<int>(faces_.size()); ++fi) {
      const Face& f = faces_[fi];
      if (f.kind == FaceKind::Curvilinear) continue;
      std::vector<Vec3> loop;
      for (int v : f.vertices) loop.push_back(vertices_[v]);
      const Vec3 n = newell_normal(loop);
      if (n.norm() <= tol * tol) throw Error(ErrorKind::DegenerateGeometry, "face with zero area");
      const Vec3 un = n.normalized();
      for (const auto& p : loop) {
        if (std::abs((p - loop[0]).dot(un)) > tol) {
          throw Error(ErrorKind::NonPlanarFace, "face " + std::to_string(fi) + " is not planar");
        }
      }
    }
  }

  void finalize_macro() {
    measure_ = 0.0;
    for (const auto& ch : children_) measure_ += ch.measure();
    compute_diameter();
    if (dim_ == 2) {
      // Chain the boundary segments into a single loop.
      std::map<Vec3, std::vector<int>, detail::Vec3Less> starts;
      for (int k = 0; k < static_cast<int>(facets_.size()); ++k) starts[facets_[k].points[0]].push_back(k);
      std::vector<bool> used(facets_.size(), false);
      int k = 0;
      for (std::size_t step = 0; step < facets_.size(); ++step) {
        used[k] = true;
        polygon_.push_back(facets_[k].points[0]);
        const auto it = starts.find(facets_[k].points[1]);
        if (it == starts.end()) throw Error(ErrorKind::DegenerateGeometry, "macrocell boundary is not closed");
        int next = -1;
        for (int cand : it->second) {
          if (!used[cand]) next = cand;
        }
        if (next < 0) {
          if (step + 1 != facets_.size()) throw Error(ErrorKind::DegenerateGeometry, "macrocell has holes or is disconnected");
          break;
        }
        k = next;
      }
      double area2 = 0.0;
      for (std::size_t i = 0; i < polygon_.size(); ++i) {
        const Vec3& p = polygon_[i];
        const Vec3& q = polygon_[(i + 1) % polygon_.size()];
        area2 += p.x() * q.y() - q.x() * p.y();
      }
      if (std::abs(0.5 * area2 - measure_) > 1e-9 * diameter_ * diameter_) {
        throw Error(ErrorKind::DegenerateGeometry, "macrocell children overlap or leave gaps");
      }
    } else {
      double vol = 0.0;
      for (const auto& f : facets_) vol += f.points[0].dot(f.points[1].cross(f.points[2])) / 6.0;
      if (std::abs(vol - measure_) > 1e-9 * std::pow(diameter_, 3)) {
        throw Error(ErrorKind::DegenerateGeometry, "macrocell children overlap or leave gaps");
      }
    }
  }

  int dim_ = 2;
  CellKind kind_ = CellKind::GenericPolytope;
  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  std::vector<Cell> children_;
  std::vector<double> heights_;
  std::vector<std::pair<int, int>> owners_;
  std::vector<BoundaryFacet> facets_;
  std::vector<Vec3> polygon_;
  double diameter_ = 0.0;
  double measure_ = 0.0;
};

// ---- measures, normals ---------------------------------------------------

inline double diameter(const Cell& cell) { return cell.diameter(); }

inline double measure(const Cell& cell) { return cell.measure(); }

/// (d-1)-measure of face `face` (curvilinear faces sum their sub-facets).
inline double measure(const Cell& cell, int face) {
  cell.face(face);
  double m = 0.0;
  for (const auto& f : cell.boundary_facets()) {
    if (f.face == face) m += detail::facet_area_normal(f).norm();
  }
  if (!(m > 0.0)) throw Error(ErrorKind::DegenerateGeometry, "face has zero measure");
  return m;
}

inline double boundary_measure(const Cell& cell) {
  double m = 0.0;
  for (const auto& f : cell.boundary_facets()) m += detail::facet_area_normal(f).norm();
  return m;
}

/// Outward unit normal of a planar face.
inline Vec3 outward_unit_normal(const Cell& cell, int face) {
  if (cell.face(face).kind == FaceKind::Curvilinear) {
    throw Error(ErrorKind::CurvilinearFace, "outward_unit_normal needs a planar face; use mean_normal");
  }
  for (const auto& f : cell.boundary_facets()) {
    if (f.face != face) continue;
    const Vec3 n = detail::facet_area_normal(f);
    const double len = n.norm();
    if (len > 0.0) return n / len;
  }
  throw Error(ErrorKind::DegenerateGeometry, "face has zero area");
}

/// (1/|Γ|) ∫_Γ n dΓ.  For planar faces this is the outward unit normal.
inline Vec3 mean_normal(const Cell& cell, int face) {
  if (cell.face(face).kind == FaceKind::Planar) return outward_unit_normal(cell, face);
  std::vector<Vec3> unit;
  Vec3 sum = Vec3::Zero();
  double m = 0.0;
  for (const auto& f : cell.boundary_facets()) {
    if (f.face != face) continue;
    const Vec3 n = detail::facet_area_normal(f);
    const double len = n.norm();
    if (len == 0.0) continue;
    unit.push_back(n / len);
    sum += n;
    m += len;
  }
  for (std::size_t i = 0; i < unit.size(); ++i) {
    for (std::size_t j = i + 1; j < unit.size(); ++j) {
      if (!(unit[i].dot(unit[j]) > 0.0)) {
        throw Error(ErrorKind::CurvilinearFace,
                    "face " + std::to_string(face) + " violates n(x1).n(x2) > 0; mean normal undefined");
      }
    }
  }
  if (!(m > 0.0)) throw Error(ErrorKind::DegenerateGeometry, "face has zero measure");
  return sum / m;
}

inline Vec3 centroid(const Simplex& s) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : s) c += p;
  return c / static_cast<double>(s.size());
}

inline Vec3 face_centroid(const Cell& cell, int face) {
  Vec3 c = Vec3::Zero();
  double m = 0.0;
  for (const auto& f : cell.boundary_facets()) {
    if (f.face != face) continue;
    const double a = detail::facet_area_normal(f).norm();
    c += a * centroid(f.points);
    m += a;
  }
  return c / m;
}

/// True if point p lies on face `face` (within `tol`).
inline bool point_on_face(const Cell& cell, int face, const Vec3& p, double tol) {
  for (const auto& f : cell.boundary_facets()) {
    if (f.face != face) continue;
    if (f.points.size() == 2) {
      if (detail::point_segment_distance(p, f.points[0], f.points[1]) <= tol) return true;
    } else if (detail::point_in_triangle(p, f.points[0], f.points[1], f.points[2], tol)) {
      return true;
    }
  }
  return false;
}

/// Index of the face containing every point of `pts`, if any.
inline std::optional<int> face_containing(const Cell& cell, std::span<const Vec3> pts) {
  const double tol = kGeometryTolerance * cell.diameter() * 10.0;
  for (int fi = 0; fi < cell.face_count(); ++fi) {
    bool all = true;
    for (const auto& p : pts) {
      if (!point_on_face(cell, fi, p, tol)) {
        all = false;
        break;
      }
    }
    if (all) return fi;
  }
  return std::nullopt;
}

inline bool is_convex(const Cell& cell) {
  const double tol = kGeometryTolerance * cell.diameter();
  if (cell.dim() == 2) {
    const auto& poly = cell.boundary_polygon();
    const std::size_t n = poly.size();
    for (std::size_t k = 0; k < n; ++k) {
      const Vec3& a = poly[(k + n - 1) % n];
      const Vec3& b = poly[k];
      const Vec3& c = poly[(k + 1) % n];
      if ((b - a).cross(c - b).z() < -tol * cell.diameter()) return false;
    }
    return true;
  }
  std::vector<Vec3> pts = cell.vertices();
  for (const auto& f : cell.boundary_facets()) pts.insert(pts.end(), f.points.begin(), f.points.end());
  for (const auto& f : cell.boundary_facets()) {
    const Vec3 n = detail::facet_area_normal(f);
    if (n.norm() == 0.0) continue;
    const Vec3 un = n.normalized();
    for (const auto& p : pts) {
      if ((p - f.points[0]).dot(un) > tol) return false;
    }
  }
  return true;
}

// ---- simplex decomposition -------------------------------------------------

/// Splits the cell into positively oriented simplices: triangles and
/// tetrahedra as themselves, polygons by ear clipping, pyramids into OABC and
/// OACD, prisms into three tetrahedra per fan column (diagonals chosen by
/// vertex index so neighbouring columns match), other polytopes as a cone from
/// the vertex centroid, macrocells child by child.
inline std::vector<Simplex> simplex_decomposition(const Cell& cell) {
  std::vector<Simplex> out;
  auto push = [&](Simplex s) {
    if (detail::simplex_signed_measure(s) < 0.0) std::swap(s[0], s[1]);
    if (!(detail::simplex_measure(s) > 0.0)) {
      throw Error(ErrorKind::DegenerateGeometry, "simplex decomposition produced a degenerate simplex");
    }
    out.push_back(std::move(s));
  };
  const auto& v = cell.vertices();
  switch (cell.kind()) {
    case CellKind::Macrocell:
      for (const auto& ch : cell.children()) {
        for (auto& s : simplex_decomposition(ch)) out.push_back(std::move(s));
      }
      return out;
    case CellKind::Tetrahedron:
      push({v[0], v[1], v[2], v[3]});
      return out;
    case CellKind::Pyramid:
      push({v[4], v[0], v[1], v[2]});
      push({v[4], v[0], v[2], v[3]});
      return out;
    case CellKind::Prism: {
      const int n = static_cast<int>(v.size()) / 2;
      for (int i = 1; i + 1 < n; ++i) {
        std::array<int, 3> t{0, i, i + 1};
        std::sort(t.begin(), t.end());
        const int a = t[0], b = t[1], c = t[2];
        push({v[a], v[b], v[c], v[n + a]});
        push({v[b], v[c], v[n + a], v[n + b]});
        push({v[c], v[n + a], v[n + b], v[n + c]});
      }
      return out;
    }
    default:
      break;
  }
  if (cell.dim() == 2) {
    const auto& poly = cell.boundary_polygon();
    if (poly.size() == 3) {
      push({poly[0], poly[1], poly[2]});
      return out;
    }
    for (const auto& t : detail::ear_clip(poly)) push({poly[t[0]], poly[t[1]], poly[t[2]]});
    return out;
  }
  Vec3 c = Vec3::Zero();
  for (const auto& p : v) c += p;
  c /= static_cast<double>(v.size());
  for (const auto& f : cell.boundary_facets()) {
    Simplex s{c, f.points[0], f.points[1], f.points[2]};
    if (detail::simplex_signed_measure(s) <= 0.0) {
      throw Error(ErrorKind::DegenerateGeometry, "polytope is not star-shaped about its vertex centroid");
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline Vec3 centroid(const Cell& cell) {
  Vec3 c = Vec3::Zero();
  double m = 0.0;
  for (const auto& s : simplex_decomposition(cell)) {
    const double w = detail::simplex_measure(s);
    c += w * centroid(s);
    m += w;
  }
  return c / m;
}

// ---- triangle angles -------------------------------------------------------

/// Σ_αβ = cot²α + cot²β − cotα·cotβ + 3 from the angles adjacent to Γ.
inline double sigma_alpha_beta(double alpha, double beta) {
  const double ca = std::cos(alpha) / std::sin(alpha);
  const double cb = std::cos(beta) / std::sin(beta);
  return ca * ca + cb * cb - ca * cb + 3.0;
}

/// Σ_αβ of the triangle with Γ = [a, c] and apex b, from the angles at a and c.
inline double sigma_alpha_beta(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ac = c - a, ab = b - a, ca = a - c, cb = b - c;
  const double area2 = ac.cross(ab).norm();
  if (!(area2 > kGeometryTolerance * ac.squaredNorm())) {
    throw Error(ErrorKind::DegenerateGeometry, "degenerate triangle");
  }
  const double cot_alpha = ac.dot(ab) / area2;
  const double cot_beta = ca.dot(cb) / area2;
  return cot_alpha * cot_alpha + cot_beta * cot_beta - cot_alpha * cot_beta + 3.0;
}

/// The same quantity in vector form, (|AB|² + |BC|² + BA·BC)/h², with h the
/// height of the apex b over Γ = [a, c].
inline double sigma_alpha_beta_vector_form(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ac = c - a;
  const double area2 = ac.cross(b - a).norm();
  if (!(area2 > kGeometryTolerance * ac.squaredNorm())) {
    throw Error(ErrorKind::DegenerateGeometry, "degenerate triangle");
  }
  const double h = area2 / ac.norm();
  return ((b - a).squaredNorm() + (c - b).squaredNorm() + (a - b).dot(c - b)) / (h * h);
}

/// Apex (vertex opposite Γ) of a triangle or tetrahedron face.
inline Vec3 opposite_vertex(const Cell& simplex_cell, int face) {
  const auto& fv = simplex_cell.face(face).vertices;
  for (int i = 0; i < static_cast<int>(simplex_cell.vertices().size()); ++i) {
    if (std::find(fv.begin(), fv.end(), i) == fv.end()) return simplex_cell.vertices()[i];
  }
  throw Error(ErrorKind::DegenerateGeometry, "no vertex opposite the face");
}

inline double sigma_alpha_beta(const Cell& triangle, int gamma) {
  if (triangle.dim() != 2 || triangle.vertices().size() != 3 || triangle.kind() == CellKind::Macrocell) {
    throw Error(ErrorKind::Precondition, "sigma_alpha_beta needs a triangle");
  }
  const auto& fv = triangle.face(gamma).vertices;
  return sigma_alpha_beta(triangle.vertices()[fv[0]], opposite_vertex(triangle, gamma), triangle.vertices()[fv[1]]);
}

// ---- normal systems --------------------------------------------------------

/// Rows are the unit (mean) normals of the selected faces.  `scales` holds the
/// lengths of the raw mean normals (1 for planar faces); zero-mean conditions
/// are invariant under that rescaling.
struct NormalSystem {
  int dim = 0;
  Eigen::MatrixXd normals;
  Eigen::VectorXd scales;
  double det = 0.0;
  bool valid = false;
};

inline NormalSystem normal_system_from_rows(const Eigen::MatrixXd& rows) {
  const int d = static_cast<int>(rows.rows());
  if (rows.cols() != d || (d != 2 && d != 3)) {
    throw Error(ErrorKind::InvalidFaceSelection, "normal system must be d x d with d in {2, 3}");
  }
  NormalSystem ns;
  ns.dim = d;
  ns.normals = rows;
  ns.scales = Eigen::VectorXd::Ones(d);
  for (int i = 0; i < d; ++i) {
    const double len = rows.row(i).norm();
    if (!(len > 0.0)) throw Error(ErrorKind::DependentNormals, "zero normal vector");
    ns.scales[i] = len;
    ns.normals.row(i) /= len;
  }
  ns.det = ns.normals.determinant();
  ns.valid = std::abs(ns.det) > kDetTolerance;
  if (!ns.valid) {
    throw Error(ErrorKind::DependentNormals, "selected normals are linearly dependent (|det N| <= 1e-9)");
  }
  return ns;
}

inline NormalSystem normal_system(const Cell& cell, std::span<const int> faces) {
  const int d = cell.dim();
  if (static_cast<int>(faces.size()) != d) {
    throw Error(ErrorKind::InvalidFaceSelection,
                "normal system needs exactly " + std::to_string(d) + " faces, got " + std::to_string(faces.size()));
  }
  Eigen::MatrixXd rows(d, d);
  for (int i = 0; i < d; ++i) {
    const Vec3 n = mean_normal(cell, faces[i]);
    for (int j = 0; j < d; ++j) rows(i, j) = n[j];
  }
  return normal_system_from_rows(rows);
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations, ascending.
inline Eigen::VectorXd jacobi_eigenvalues(Eigen::MatrixXd a, double tol = 1e-12, int max_sweeps = 100) {
  const int n = static_cast<int>(a.rows());
  const double scale = std::max(a.norm(), 1e-300);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (std::sqrt(off) <= tol * scale * 1e-3) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  Eigen::VectorXd ev = a.diagonal();
  std::sort(ev.data(), ev.data() + n);
  return ev;
}

/// T = Σ n⁽ᵏ⁾ ⊗ n⁽ᵏ⁾ and its smallest eigenvalue.
struct TMatrix {
  Eigen::MatrixXd entries;
  double lambda_min = 0.0;
};

/// λ₁ = 1 − sqrt(1 − det²) for two unit normals, written without cancellation.
inline double lambda_min_closed_form_2d(double det_n) {
  const double d2 = det_n * det_n;
  return d2 / (1.0 + std::sqrt(std::max(0.0, 1.0 - d2)));
}

inline TMatrix t_matrix(const NormalSystem& ns) {
  TMatrix t;
  t.entries = ns.normals.transpose() * ns.normals;
  if (ns.dim == 2) t.lambda_min = lambda_min_closed_form_2d(ns.det);
  else t.lambda_min = jacobi_eigenvalues(t.entries)[0];
  return t;
}

}  // namespace poincare
