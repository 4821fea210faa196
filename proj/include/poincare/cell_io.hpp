#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "poincare/geometry.hpp"
#include "poincare/mesh.hpp"

namespace poincare {

/// A parsed cell file: the cell plus the optional Γ selection it declares.
struct CellDocument {
  Cell cell;
  std::vector<int> gamma;
};

/// Per-vertex or per-cell values attached to a mesh file.
struct MeshValues {
  bool per_cell = false;
  int components = 1;
  std::vector<std::vector<double>> rows;
};

struct MeshDocument {
  Mesh mesh;
  std::optional<MeshValues> values;
};

namespace detail {

/// Line reader that skips blanks and '#' comments and remembers line numbers.
class LineReader {
 public:
  explicit LineReader(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    int no = 0;
    while (std::getline(is, line)) {
      ++no;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      std::istringstream ts(line);
      std::vector<std::string> tokens;
      for (std::string t; ts >> t;) tokens.push_back(t);
      if (!tokens.empty()) lines_.push_back({no, std::move(tokens)});
    }
  }

  bool done() const { return pos_ >= lines_.size(); }
  int line_no() const { return done() ? (lines_.empty() ? 0 : lines_.back().first) : lines_[pos_].first; }
  const std::vector<std::string>& peek() const { return lines_.at(pos_).second; }
  const std::vector<std::string>& next() {
    if (done()) fail("unexpected end of document");
    return lines_[pos_++].second;
  }
  int last_line() const { return pos_ == 0 ? 0 : lines_[pos_ - 1].first; }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::Parse, "line " + std::to_string(pos_ == 0 ? line_no() : last_line()) + ": " + what);
  }

  double real(const std::string& tok, const char* field) const {
    double v = 0.0;
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (r.ec != std::errc() || r.ptr != tok.data() + tok.size()) fail(std::string("bad number in ") + field + ": '" + tok + "'");
    return v;
  }

  int integer(const std::string& tok, const char* field) const {
    int v = 0;
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (r.ec != std::errc() || r.ptr != tok.data() + tok.size()) fail(std::string("bad integer in ") + field + ": '" + tok + "'");
    return v;
  }

 private:
  std::vector<std::pair<int, std::vector<std::string>>> lines_;
  std::size_t pos_ = 0;
};

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Vec3 read_point(LineReader& in, int dim) {
  const auto& t = in.next();
  if (static_cast<int>(t.size()) != dim) in.fail("expected " + std::to_string(dim) + " coordinates");
  Vec3 p = Vec3::Zero();
  for (int i = 0; i < dim; ++i) p[i] = in.real(t[i], "VERTICES");
  return p;
}

inline int read_count(LineReader& in, const std::vector<std::string>& header) {
  if (header.size() != 2) in.fail(header[0] + " needs a count");
  const int n = in.integer(header[1], header[0].c_str());
  if (n < 0) in.fail("negative count");
  return n;
}

inline void write_point(std::ostream& os, const Vec3& p, int dim) {
  for (int i = 0; i < dim; ++i) os << (i ? " " : "") << fmt(p[i]);
  os << "\n";
}

inline Cell build_child(const std::string& kind_name, const std::vector<Vec3>& pts, LineReader& in, int dim) {
  const auto kind = parse_cell_kind(kind_name);
  if (!kind) in.fail("unknown cell kind '" + kind_name + "'");
  if (dim == 2) return Cell::polygon(pts, {}, *kind);
  if (*kind == CellKind::Tetrahedron && pts.size() == 4) return Cell::tetrahedron(pts[0], pts[1], pts[2], pts[3]);
  if (*kind == CellKind::Pyramid && pts.size() == 5) return Cell::pyramid(pts[0], pts[1], pts[2], pts[3], pts[4]);
  in.fail("unsupported macrocell child '" + kind_name + "' with " + std::to_string(pts.size()) + " vertices");
}

}  // namespace detail

/// Parses a cell document.  Sections: DIM d, KIND name, VERTICES n (n lines),
/// optional FACES m (m lines of indices, 3D generic polytopes), CURVED f k (k
/// path points of face f, 2D) or PATCHES f k (k triangles of 9 numbers, 3D),
/// HEIGHTS n (prisms), CELLS m (macrocell children: kind and vertex indices),
/// GAMMA i j ...
inline CellDocument parse_cell(const std::string& text) {
  detail::LineReader in(text);
  int dim = 0;
  std::optional<CellKind> kind;
  std::vector<Vec3> verts;
  std::vector<std::vector<int>> faces;
  std::map<int, std::vector<Vec3>> curved;
  std::map<int, std::vector<std::array<Vec3, 3>>> patches;
  std::vector<double> heights;
  std::vector<std::pair<std::string, std::vector<int>>> children;
  std::vector<int> gamma;
  bool have_vertices = false;
  while (!in.done()) {
    const auto h = in.next();
    const std::string& key = h[0];
    if (key == "DIM") {
      if (h.size() != 2) in.fail("DIM needs one value");
      dim = in.integer(h[1], "DIM");
      if (dim != 2 && dim != 3) in.fail("DIM must be 2 or 3");
    } else if (key == "KIND") {
      if (h.size() != 2) in.fail("KIND needs one value");
      kind = parse_cell_kind(h[1]);
      if (!kind) in.fail("unknown cell kind '" + h[1] + "'");
    } else if (key == "VERTICES") {
      if (dim == 0) in.fail("DIM must precede VERTICES");
      const int n = detail::read_count(in, h);
      for (int i = 0; i < n; ++i) verts.push_back(detail::read_point(in, dim));
      have_vertices = true;
    } else if (key == "FACES") {
      const int n = detail::read_count(in, h);
      for (int i = 0; i < n; ++i) {
        const auto& t = in.next();
        std::vector<int> f;
        for (const auto& s : t) {
          const int v = in.integer(s, "FACES");
          if (v < 0 || v >= static_cast<int>(verts.size())) in.fail("face vertex index " + s + " out of range");
          f.push_back(v);
        }
        faces.push_back(std::move(f));
      }
    } else if (key == "CURVED" || key == "PATCHES") {
      if (h.size() != 3) in.fail(key + " needs a face index and a count");
      const int f = in.integer(h[1], key.c_str());
      const int n = in.integer(h[2], key.c_str());
      if (n < 1) in.fail("empty " + key + " section");
      for (int i = 0; i < n; ++i) {
        if (key == "CURVED") {
          curved[f].push_back(detail::read_point(in, 2));
        } else {
          const auto& t = in.next();
          if (t.size() != 9) in.fail("a patch needs 9 coordinates");
          std::array<Vec3, 3> tri;
          for (int k = 0; k < 9; ++k) tri[k / 3][k % 3] = in.real(t[k], "PATCHES");
          patches[f].push_back(tri);
        }
      }
    } else if (key == "HEIGHTS") {
      const int n = detail::read_count(in, h);
      const auto& t = in.next();
      if (static_cast<int>(t.size()) != n) in.fail("HEIGHTS expects " + std::to_string(n) + " values");
      for (const auto& s : t) heights.push_back(in.real(s, "HEIGHTS"));
    } else if (key == "CELLS") {
      const int n = detail::read_count(in, h);
      for (int i = 0; i < n; ++i) {
        const auto& t = in.next();
        std::vector<int> ids;
        for (std::size_t k = 1; k < t.size(); ++k) {
          const int v = in.integer(t[k], "CELLS");
          if (v < 0 || v >= static_cast<int>(verts.size())) in.fail("cell vertex index " + t[k] + " out of range");
          ids.push_back(v);
        }
        children.emplace_back(t[0], std::move(ids));
      }
    } else if (key == "GAMMA") {
      for (std::size_t k = 1; k < h.size(); ++k) gamma.push_back(in.integer(h[k], "GAMMA"));
    } else {
      in.fail("unknown section '" + key + "'");
    }
  }
  if (dim == 0) in.fail("missing DIM");
  if (!kind) in.fail("missing KIND");
  if (!have_vertices) in.fail("missing VERTICES");
  auto build = [&]() -> Cell {
    const int n = static_cast<int>(verts.size());
    switch (*kind) {
      case CellKind::Macrocell: {
        if (children.empty()) in.fail("macrocell needs CELLS");
        std::vector<Cell> cs;
        for (const auto& [name, ids] : children) {
          std::vector<Vec3> pts;
          for (int v : ids) pts.push_back(verts[v]);
          cs.push_back(detail::build_child(name, pts, in, dim));
        }
        return Cell::macrocell(std::move(cs));
      }
      case CellKind::Prism: {
        if (dim != 3) in.fail("Prism needs DIM 3");
        if (static_cast<int>(heights.size()) != n) in.fail("Prism needs HEIGHTS with one value per base vertex");
        for (const auto& p : verts) {
          if (p.z() != verts[0].z()) in.fail("prism base vertices must share one z coordinate");
        }
        return Cell::prism(verts, heights, verts[0].z());
      }
      case CellKind::Tetrahedron:
        if (dim != 3 || n != 4) in.fail("Tetrahedron needs DIM 3 and 4 vertices");
        return Cell::tetrahedron(verts[0], verts[1], verts[2], verts[3]);
      case CellKind::Pyramid:
        if (dim != 3 || n != 5) in.fail("Pyramid needs DIM 3 and 5 vertices");
        return Cell::pyramid(verts[0], verts[1], verts[2], verts[3], verts[4]);
      default:
        break;
    }
    if (dim == 2) {
      if (*kind == CellKind::Triangle && n != 3) in.fail("Triangle needs 3 vertices");
      if (*kind == CellKind::Quadrilateral && n != 4) in.fail("Quadrilateral needs 4 vertices");
      for (const auto& [f, path] : curved) {
        if (f < 0 || f >= n) in.fail("CURVED face index " + std::to_string(f) + " out of range");
      }
      return Cell::polygon(verts, curved, *kind);
    }
    if (faces.empty()) in.fail("3D " + to_string(*kind) + " needs FACES");
    std::vector<Face> fs;
    for (auto& f : faces) fs.push_back(Face{f});
    for (const auto& [f, ps] : patches) {
      if (f < 0 || f >= static_cast<int>(fs.size())) in.fail("PATCHES face index out of range");
      fs[f].kind = FaceKind::Curvilinear;
      fs[f].patches = ps;
    }
    return Cell::polytope(verts, fs, *kind);
  };
  CellDocument doc{build(), gamma};
  for (int g : doc.gamma) {
    if (g < 0 || g >= doc.cell.face_count()) in.fail("GAMMA face " + std::to_string(g) + " out of range");
  }
  return doc;
}

/// Writes a document that `parse_cell` turns back into the same cell.
inline std::string serialize_cell(const Cell& cell, const std::vector<int>& gamma = {}) {
  std::ostringstream os;
  const int dim = cell.dim();
  os << "DIM " << dim << "\nKIND " << to_string(cell.kind()) << "\n";
  if (cell.kind() == CellKind::Macrocell) {
    std::vector<Vec3> verts;
    std::map<Vec3, int, detail::Vec3Less> index;
    std::vector<std::pair<std::string, std::vector<int>>> rows;
    for (const auto& ch : cell.children()) {
      std::vector<int> ids;
      for (const auto& p : ch.vertices()) {
        auto [it, ins] = index.emplace(p, static_cast<int>(verts.size()));
        if (ins) verts.push_back(p);
        ids.push_back(it->second);
      }
      rows.emplace_back(to_string(ch.kind()), ids);
    }
    os << "VERTICES " << verts.size() << "\n";
    for (const auto& p : verts) detail::write_point(os, p, dim);
    os << "CELLS " << rows.size() << "\n";
    for (const auto& [k, ids] : rows) {
      os << k;
      for (int v : ids) os << " " << v;
      os << "\n";
    }
  } else if (cell.kind() == CellKind::Prism) {
    const int n = static_cast<int>(cell.heights().size());
    os << "VERTICES " << n << "\n";
    for (int i = 0; i < n; ++i) detail::write_point(os, cell.vertices()[i], dim);
    os << "HEIGHTS " << n << "\n";
    for (int i = 0; i < n; ++i) os << (i ? " " : "") << detail::fmt(cell.heights()[i]);
    os << "\n";
  } else {
    os << "VERTICES " << cell.vertices().size() << "\n";
    for (const auto& p : cell.vertices()) detail::write_point(os, p, dim);
    const bool implicit = dim == 2 || cell.kind() == CellKind::Tetrahedron || cell.kind() == CellKind::Pyramid;
    if (!implicit) {
      os << "FACES " << cell.face_count() << "\n";
      for (const auto& f : cell.faces()) {
        for (std::size_t k = 0; k < f.vertices.size(); ++k) os << (k ? " " : "") << f.vertices[k];
        os << "\n";
      }
    }
    for (int fi = 0; fi < cell.face_count(); ++fi) {
      const Face& f = cell.faces()[fi];
      if (f.kind != FaceKind::Curvilinear) continue;
      if (dim == 2) {
        os << "CURVED " << fi << " " << f.path.size() << "\n";
        for (const auto& p : f.path) detail::write_point(os, p, 2);
      } else {
        os << "PATCHES " << fi << " " << f.patches.size() << "\n";
        for (const auto& t : f.patches) {
          for (int k = 0; k < 9; ++k) os << (k ? " " : "") << detail::fmt(t[k / 3][k % 3]);
          os << "\n";
        }
      }
    }
  }
  if (!gamma.empty()) {
    os << "GAMMA";
    for (int g : gamma) os << " " << g;
    os << "\n";
  }
  return os.str();
}

/// Structural and bitwise-coordinate equality.
inline bool same_cell(const Cell& a, const Cell& b) {
  if (a.dim() != b.dim() || a.kind() != b.kind() || a.vertices().size() != b.vertices().size() ||
      a.faces().size() != b.faces().size() || a.heights() != b.heights() ||
      a.children().size() != b.children().size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.vertices().size(); ++i) {
    if (a.vertices()[i] != b.vertices()[i]) return false;
  }
  for (std::size_t i = 0; i < a.faces().size(); ++i) {
    const Face& fa = a.faces()[i];
    const Face& fb = b.faces()[i];
    if (fa.vertices != fb.vertices || fa.kind != fb.kind || fa.path.size() != fb.path.size() ||
        fa.patches.size() != fb.patches.size()) {
      return false;
    }
    for (std::size_t k = 0; k < fa.path.size(); ++k) {
      if (fa.path[k] != fb.path[k]) return false;
    }
    for (std::size_t k = 0; k < fa.patches.size(); ++k) {
      for (int j = 0; j < 3; ++j) {
        if (fa.patches[k][j] != fb.patches[k][j]) return false;
      }
    }
  }
  for (std::size_t i = 0; i < a.children().size(); ++i) {
    if (!same_cell(a.children()[i], b.children()[i])) return false;
  }
  return true;
}

/// Mesh document: DIM, VERTICES, CELLS (kind and vertex indices), optional
/// MEASURE (declared domain measure) and VALUES vertex|cell k (one row per
/// vertex or cell).
inline MeshDocument parse_mesh(const std::string& text) {
  detail::LineReader in(text);
  int dim = 0;
  std::vector<Vec3> verts;
  std::vector<MeshCellRecord> records;
  std::optional<double> hull;
  std::optional<MeshValues> values;
  while (!in.done()) {
    const auto h = in.next();
    const std::string& key = h[0];
    if (key == "DIM") {
      if (h.size() != 2) in.fail("DIM needs one value");
      dim = in.integer(h[1], "DIM");
      if (dim != 2 && dim != 3) in.fail("DIM must be 2 or 3");
    } else if (key == "VERTICES") {
      if (dim == 0) in.fail("DIM must precede VERTICES");
      const int n = detail::read_count(in, h);
      for (int i = 0; i < n; ++i) verts.push_back(detail::read_point(in, dim));
    } else if (key == "CELLS") {
      const int n = detail::read_count(in, h);
      for (int i = 0; i < n; ++i) {
        const auto& t = in.next();
        const auto kind = parse_cell_kind(t[0]);
        if (!kind) in.fail("unknown cell kind '" + t[0] + "'");
        MeshCellRecord r{*kind, {}};
        for (std::size_t k = 1; k < t.size(); ++k) {
          const int v = in.integer(t[k], "CELLS");
          if (v < 0 || v >= static_cast<int>(verts.size())) in.fail("cell vertex index " + t[k] + " out of range");
          r.vertex_ids.push_back(v);
        }
        records.push_back(std::move(r));
      }
    } else if (key == "MEASURE") {
      if (h.size() != 2) in.fail("MEASURE needs one value");
      hull = in.real(h[1], "MEASURE");
    } else if (key == "VALUES") {
      if (h.size() != 3 || (h[1] != "vertex" && h[1] != "cell")) in.fail("VALUES needs 'vertex|cell' and a width");
      MeshValues mv;
      mv.per_cell = h[1] == "cell";
      if (mv.per_cell && records.empty()) in.fail("VALUES cell must follow CELLS");
      if (!mv.per_cell && verts.empty()) in.fail("VALUES vertex must follow VERTICES");
      mv.components = in.integer(h[2], "VALUES");
      if (mv.components < 1 || mv.components > 3) in.fail("VALUES width must be 1..3");
      const std::size_t rows = mv.per_cell ? records.size() : verts.size();
      for (std::size_t i = 0; i < rows; ++i) {
        const auto& t = in.next();
        if (static_cast<int>(t.size()) != mv.components) in.fail("VALUES row has the wrong width");
        std::vector<double> row;
        for (const auto& s : t) row.push_back(in.real(s, "VALUES"));
        mv.rows.push_back(std::move(row));
      }
      values = std::move(mv);
    } else {
      in.fail("unknown section '" + key + "'");
    }
  }
  if (dim == 0) in.fail("missing DIM");
  if (verts.empty()) in.fail("missing VERTICES");
  if (records.empty()) in.fail("missing CELLS");
  return {Mesh::build(dim, std::move(verts), std::move(records), hull), std::move(values)};
}

inline std::string serialize_mesh(const Mesh& mesh, const std::optional<MeshValues>& values = std::nullopt) {
  std::ostringstream os;
  os << "DIM " << mesh.dim() << "\nVERTICES " << mesh.vertices().size() << "\n";
  for (const auto& p : mesh.vertices()) detail::write_point(os, p, mesh.dim());
  os << "CELLS " << mesh.records().size() << "\n";
  for (const auto& r : mesh.records()) {
    os << to_string(r.kind);
    for (int v : r.vertex_ids) os << " " << v;
    os << "\n";
  }
  if (mesh.hull_measure()) os << "MEASURE " << detail::fmt(*mesh.hull_measure()) << "\n";
  if (values) {
    os << "VALUES " << (values->per_cell ? "cell" : "vertex") << " " << values->components << "\n";
    for (const auto& row : values->rows) {
      for (std::size_t k = 0; k < row.size(); ++k) os << (k ? " " : "") << detail::fmt(row[k]);
      os << "\n";
    }
  }
  return os.str();
}

inline bool same_mesh(const Mesh& a, const Mesh& b) {
  if (a.dim() != b.dim() || a.records() != b.records() || a.vertices().size() != b.vertices().size() ||
      a.hull_measure() != b.hull_measure()) {
    return false;
  }
  for (std::size_t i = 0; i < a.vertices().size(); ++i) {
    if (a.vertices()[i] != b.vertices()[i]) return false;
  }
  return true;
}

/// Continuous piecewise-linear field from per-vertex values, linear on each
/// simplex of the cells' decompositions.  `value` returns up to three
/// components; `jacobian` is constant per simplex.
class NodalField {
 public:
  NodalField(const Mesh& mesh, const MeshValues& values) : dim_(mesh.dim()), components_(values.components) {
    if (values.per_cell) throw Error(ErrorKind::UnknownField, "nodal fields need VALUES vertex");
    if (values.rows.size() != mesh.vertices().size()) {
      throw Error(ErrorKind::UnknownField, "VALUES vertex needs one row per vertex");
    }
    std::map<Vec3, int, detail::Vec3Less> index;
    for (std::size_t i = 0; i < mesh.vertices().size(); ++i) index.emplace(mesh.vertices()[i], static_cast<int>(i));
    for (const auto& cell : mesh.cells()) {
      for (const auto& s : simplex_decomposition(cell)) {
        Piece p;
        p.origin = s[0];
        Eigen::MatrixXd e(dim_, dim_);
        for (int k = 1; k <= dim_; ++k) {
          for (int i = 0; i < dim_; ++i) e(i, k - 1) = s[k][i] - s[0][i];
        }
        p.inverse = e.inverse();
        Eigen::MatrixXd vals(dim_ + 1, 3);
        vals.setZero();
        for (int k = 0; k <= dim_; ++k) {
          auto it = index.find(s[k]);
          if (it == index.end()) throw Error(ErrorKind::UnknownField, "cell decomposition uses a point that is not a mesh vertex");
          for (int c = 0; c < components_; ++c) vals(k, c) = values.rows[it->second][c];
        }
        p.base = vals.row(0).transpose();
        // J(c, j) = Σ_k (v_k − v_0)_c ∂λ_k/∂x_j
        p.jacobian.setZero();
        for (int k = 1; k <= dim_; ++k) {
          for (int j = 0; j < dim_; ++j) {
            for (int c = 0; c < 3; ++c) p.jacobian(c, j) += (vals(k, c) - vals(0, c)) * p.inverse(k - 1, j);
          }
        }
        pieces_.push_back(std::move(p));
      }
    }
  }

  int components() const { return components_; }

  Vec3 value(const Vec3& x) const {
    const Piece& p = locate(x);
    return p.base + p.jacobian * (x - p.origin);
  }
  Eigen::Matrix3d jacobian(const Vec3& x) const { return locate(x).jacobian; }

 private:
  struct Piece {
    Vec3 origin;
    Eigen::MatrixXd inverse;
    Vec3 base;
    Eigen::Matrix3d jacobian = Eigen::Matrix3d::Zero();
  };

  const Piece& locate(const Vec3& x) const {
    const Piece* best = nullptr;
    double best_min = -std::numeric_limits<double>::infinity();
    for (const auto& p : pieces_) {
      const Eigen::VectorXd lam = p.inverse * (x - p.origin).head(dim_);
      const double m = std::min(lam.minCoeff(), 1.0 - lam.sum());
      if (m > best_min) best_min = m, best = &p;
      if (m >= 0.0) break;
    }
    if (!best || best_min < -1e-9) throw Error(ErrorKind::UnknownField, "point outside the mesh");
    return *best;
  }

  int dim_;
  int components_;
  std::vector<Piece> pieces_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::Parse, "cannot open '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace poincare
