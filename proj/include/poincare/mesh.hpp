#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "poincare/geometry.hpp"

namespace poincare {

/// A mesh cell as stored: kind plus indices into the shared vertex list.
/// 2D cells list their vertices in boundary order; pyramids list the base
/// ABCD then the apex; prisms list the base loop then the top loop.
struct MeshCellRecord {
  CellKind kind = CellKind::Triangle;
  std::vector<int> vertex_ids;

  bool operator==(const MeshCellRecord&) const = default;
};

/// A face of the mesh (an element of ℰ_h) with the cells that own it.
struct MeshFace {
  std::vector<int> vertex_ids;  // sorted
  std::vector<std::pair<int, int>> owners;  // (cell, local face)
};

/// Conforming polygonal/polyhedral mesh 𝒯_h.
class Mesh {
 public:
  static Mesh build(int dim, std::vector<Vec3> vertices, std::vector<MeshCellRecord> records,
                    std::optional<double> hull_measure = std::nullopt) {
    if (dim != 2 && dim != 3) throw Error(ErrorKind::Precondition, "mesh dimension must be 2 or 3");
    if (records.empty()) throw Error(ErrorKind::Precondition, "mesh has no cells");
    Mesh m;
    m.dim_ = dim;
    m.vertices_ = std::move(vertices);
    m.records_ = std::move(records);
    m.hull_measure_ = hull_measure;
    for (std::size_t ci = 0; ci < m.records_.size(); ++ci) {
      m.cells_.push_back(make_cell(dim, m.vertices_, m.records_[ci], static_cast<int>(ci)));
    }
    std::map<std::vector<int>, int> index;
    m.cell_faces_.resize(m.cells_.size());
    for (int ci = 0; ci < static_cast<int>(m.cells_.size()); ++ci) {
      const auto& cell = m.cells_[ci];
      const auto& ids = m.records_[ci].vertex_ids;
      for (int fi = 0; fi < cell.face_count(); ++fi) {
        std::vector<int> key;
        for (int v : cell.face(fi).vertices) key.push_back(ids[v]);
        std::sort(key.begin(), key.end());
        auto [it, inserted] = index.emplace(key, static_cast<int>(m.faces_.size()));
        if (inserted) m.faces_.push_back(MeshFace{key, {}});
        m.faces_[it->second].owners.emplace_back(ci, fi);
        m.cell_faces_[ci].push_back(it->second);
      }
    }
    for (const auto& f : m.faces_) {
      if (f.owners.size() > 2) throw Error(ErrorKind::Precondition, "a mesh face is shared by more than two cells");
    }
    if (hull_measure) {
      double total = 0.0;
      for (const auto& c : m.cells_) total += c.measure();
      if (std::abs(total - *hull_measure) > 1e-9 * std::max(1.0, *hull_measure)) {
        throw Error(ErrorKind::Precondition, "cells do not tile the declared domain measure");
      }
    }
    return m;
  }

  int dim() const { return dim_; }
  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<MeshCellRecord>& records() const { return records_; }
  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<MeshFace>& faces() const { return faces_; }
  std::optional<double> hull_measure() const { return hull_measure_; }
  /// Global face index of local face `f` of cell `c`.
  int global_face(int c, int f) const { return cell_faces_.at(c).at(f); }
  std::size_t size() const { return cells_.size(); }

  double measure() const {
    double total = 0.0;
    for (const auto& c : cells_) total += c.measure();
    return total;
  }

 private:
  static Cell make_cell(int dim, const std::vector<Vec3>& verts, const MeshCellRecord& r, int index) {
    std::vector<Vec3> p;
    for (int id : r.vertex_ids) {
      if (id < 0 || id >= static_cast<int>(verts.size())) {
        throw Error(ErrorKind::Parse, "cell " + std::to_string(index) + ": vertex index " + std::to_string(id) +
                                          " out of range");
      }
      p.push_back(verts[id]);
    }
    const int n = static_cast<int>(p.size());
    auto expect = [&](bool ok, const char* what) {
      if (!ok) throw Error(ErrorKind::Parse, "cell " + std::to_string(index) + ": " + what);
    };
    if (dim == 2) {
      expect(r.kind != CellKind::Tetrahedron && r.kind != CellKind::Pyramid && r.kind != CellKind::Prism &&
                 r.kind != CellKind::Macrocell,
             "3D cell kind in a 2D mesh");
      expect(r.kind != CellKind::Triangle || n == 3, "Triangle needs 3 vertices");
      expect(r.kind != CellKind::Quadrilateral || n == 4, "Quadrilateral needs 4 vertices");
      return Cell::polygon(p, {}, r.kind);
    }
    switch (r.kind) {
      case CellKind::Tetrahedron:
        expect(n == 4, "Tetrahedron needs 4 vertices");
        return Cell::tetrahedron(p[0], p[1], p[2], p[3]);
      case CellKind::Pyramid:
        expect(n == 5, "Pyramid needs 5 vertices");
        return Cell::pyramid(p[0], p[1], p[2], p[3], p[4]);
      case CellKind::Prism: {
        expect(n >= 6 && n % 2 == 0, "Prism needs a base loop and a top loop of equal length");
        const int k = n / 2;
        const double z0 = p[0].z();
        std::vector<Vec3> base(p.begin(), p.begin() + k);
        std::vector<double> heights;
        for (int i = 0; i < k; ++i) {
          expect(base[i].z() == z0, "prism base must be horizontal");
          expect(p[k + i].x() == base[i].x() && p[k + i].y() == base[i].y(), "prism top must lie above the base");
          heights.push_back(p[k + i].z() - z0);
        }
        return Cell::prism(base, heights, z0);
      }
      default:
        throw Error(ErrorKind::Parse, "cell " + std::to_string(index) + ": unsupported 3D mesh cell kind " +
                                          to_string(r.kind));
    }
  }

  int dim_ = 2;
  std::vector<Vec3> vertices_;
  std::vector<MeshCellRecord> records_;
  std::vector<Cell> cells_;
  std::vector<MeshFace> faces_;
  std::vector<std::vector<int>> cell_faces_;
  std::optional<double> hull_measure_;
};

/// n×m grid of axis-aligned rectangles covering (0,a)×(0,b).
inline Mesh uniform_rectangle_mesh(int nx, int ny, double a = 1.0, double b = 1.0) {
  std::vector<Vec3> v;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) v.emplace_back(a * i / nx, b * j / ny, 0.0);
  }
  std::vector<MeshCellRecord> cells;
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      cells.push_back({CellKind::Quadrilateral, {id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)}});
    }
  }
  return Mesh::build(2, std::move(v), std::move(cells), a * b);
}

}  // namespace poincare
