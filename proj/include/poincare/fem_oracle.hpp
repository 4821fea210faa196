#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#if defined(POINCARE_USE_CHOLMOD)
#include <Eigen/CholmodSupport>
#endif

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "poincare/geometry.hpp"

namespace poincare {

using SparseMatrix = Eigen::SparseMatrix<double>;

#if defined(POINCARE_USE_CHOLMOD)
using SpdFactorization = Eigen::CholmodSupernodalLLT<SparseMatrix>;
#else
using SpdFactorization = Eigen::SimplicialLDLT<SparseMatrix>;
#endif

/// A boundary (or interior) facet of a simplicial mesh with a tag.
struct TaggedFacet {
  std::array<int, 3> v{-1, -1, -1};
  int count = 0;  // 2 in 2D, 3 in 3D
  int tag = -1;
};

struct SimplicialMesh {
  int dim = 2;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 4>> simplices;
  std::vector<TaggedFacet> facets;
  int level = 0;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int simplex_count() const { return static_cast<int>(simplices.size()); }
  Simplex simplex(int i) const {
    Simplex s;
    for (int k = 0; k <= dim; ++k) s.push_back(vertices[simplices[i][k]]);
    return s;
  }
  double facet_measure(const TaggedFacet& f) const {
    if (f.count == 2) return (vertices[f.v[1]] - vertices[f.v[0]]).norm();
    return 0.5 * (vertices[f.v[1]] - vertices[f.v[0]]).cross(vertices[f.v[2]] - vertices[f.v[0]]).norm();
  }
  double tagged_measure(int tag) const {
    double m = 0.0;
    for (const auto& f : facets) {
      if (f.tag == tag) m += facet_measure(f);
    }
    return m;
  }
};

/// Decides the tag of a coarse facet from its points; nullopt = untagged.
using FacetTagger = std::function<std::optional<int>(std::span<const Vec3>)>;

/// Coarse simplices plus a tagger.  Boundary facets that the tagger rejects
/// are kept with tag −1; interior facets are kept only when tagged.
struct OracleDomain {
  int dim = 2;
  std::vector<Simplex> simplices;
  FacetTagger tagger;
  double diameter = 1.0;
};

inline OracleDomain domain_from_cell(const Cell& cell) {
  OracleDomain d;
  d.dim = cell.dim();
  d.simplices = simplex_decomposition(cell);
  d.diameter = cell.diameter();
  d.tagger = [cell](std::span<const Vec3> pts) -> std::optional<int> { return face_containing(cell, pts); };
  return d;
}

/// Domain made of the given triangles whose Γ (tag 0) is the segment [a, b],
/// typically an interior cut such as a median or a diagonal.  The triangles
/// must have an edge on every part of the segment.
inline OracleDomain segment_domain(std::vector<Simplex> triangles, const Vec3& a, const Vec3& b) {
  OracleDomain d;
  d.dim = 2;
  d.simplices = std::move(triangles);
  double diam = 0.0;
  for (const auto& s : d.simplices) {
    for (const auto& p : s) {
      for (const auto& q : s) diam = std::max(diam, (p - q).norm());
    }
  }
  d.diameter = diam;
  const double tol = 1e-12 * std::max(1.0, diam);
  d.tagger = [a, b, tol](std::span<const Vec3> pts) -> std::optional<int> {
    for (const auto& p : pts) {
      if (detail::point_segment_distance(p, a, b) > tol) return std::nullopt;
    }
    return 0;
  };
  return d;
}

namespace detail {

inline void orient(SimplicialMesh& m, std::array<int, 4>& s) {
  Simplex pts;
  for (int k = 0; k <= m.dim; ++k) pts.push_back(m.vertices[s[k]]);
  if (simplex_signed_measure(pts) < 0.0) std::swap(s[0], s[1]);
}

}  // namespace detail

/// Coarse conforming mesh from the domain's simplices.
inline SimplicialMesh coarse_mesh(const OracleDomain& domain) {
  SimplicialMesh m;
  m.dim = domain.dim;
  std::map<Vec3, int, detail::Vec3Less> index;
  auto vid = [&](const Vec3& p) {
    auto [it, inserted] = index.emplace(p, m.vertex_count());
    if (inserted) m.vertices.push_back(p);
    return it->second;
  };
  std::map<std::vector<int>, int> facet_uses;
  for (const auto& s : domain.simplices) {
    if (static_cast<int>(s.size()) != domain.dim + 1) {
      throw Error(ErrorKind::DegenerateGeometry, "simplex size does not match the dimension");
    }
    std::array<int, 4> ids{-1, -1, -1, -1};
    for (int k = 0; k <= domain.dim; ++k) ids[k] = vid(s[k]);
    detail::orient(m, ids);
    m.simplices.push_back(ids);
    for (int k = 0; k <= domain.dim; ++k) {
      std::vector<int> f;
      for (int j = 0; j <= domain.dim; ++j) {
        if (j != k) f.push_back(ids[j]);
      }
      std::sort(f.begin(), f.end());
      ++facet_uses[f];
    }
  }
  for (const auto& [f, uses] : facet_uses) {
    if (uses > 2) throw Error(ErrorKind::DegenerateGeometry, "non-conforming coarse mesh");
    std::vector<Vec3> pts;
    for (int v : f) pts.push_back(m.vertices[v]);
    std::optional<int> tag = domain.tagger ? domain.tagger(pts) : std::nullopt;
    if (uses == 2 && !tag) continue;
    TaggedFacet tf;
    tf.count = static_cast<int>(f.size());
    for (int k = 0; k < tf.count; ++k) tf.v[k] = f[k];
    tf.tag = tag.value_or(-1);
    m.facets.push_back(tf);
  }
  return m;
}

/// One uniform red refinement: triangles into 4, tetrahedra into 8 (the inner
/// octahedron split along its shortest diagonal); tagged facets follow.
inline SimplicialMesh refine(const SimplicialMesh& in) {
  SimplicialMesh out;
  out.dim = in.dim;
  out.level = in.level + 1;
  out.vertices = in.vertices;
  std::map<std::pair<int, int>, int> mids;
  auto mid = [&](int a, int b) {
    const auto key = std::make_pair(std::min(a, b), std::max(a, b));
    auto it = mids.find(key);
    if (it != mids.end()) return it->second;
    out.vertices.push_back(0.5 * (in.vertices[a] + in.vertices[b]));
    const int id = out.vertex_count() - 1;
    mids.emplace(key, id);
    return id;
  };
  auto push = [&](std::array<int, 4> s) {
    detail::orient(out, s);
    out.simplices.push_back(s);
  };
  for (const auto& s : in.simplices) {
    if (in.dim == 2) {
      const int a = s[0], b = s[1], c = s[2];
      const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
      push({a, ab, ca, -1});
      push({ab, b, bc, -1});
      push({ca, bc, c, -1});
      push({ab, bc, ca, -1});
    } else {
      int m[4][4];
      for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) m[i][j] = m[j][i] = mid(s[i], s[j]);
      }
      push({s[0], m[0][1], m[0][2], m[0][3]});
      push({m[0][1], s[1], m[1][2], m[1][3]});
      push({m[0][2], m[1][2], s[2], m[2][3]});
      push({m[0][3], m[1][3], m[2][3], s[3]});
      // Octahedron diagonals join midpoints of opposite edges.
      const std::array<std::array<int, 4>, 3> pairs{{{0, 1, 2, 3}, {0, 2, 1, 3}, {0, 3, 1, 2}}};
      int best = 0;
      double best_len = 1e300;
      for (int k = 0; k < 3; ++k) {
        const auto& p = pairs[k];
        const double len = (out.vertices[m[p[0]][p[1]]] - out.vertices[m[p[2]][p[3]]]).squaredNorm();
        if (len < best_len) {
          best_len = len;
          best = k;
        }
      }
      const auto& p = pairs[best];
      const int d0 = m[p[0]][p[1]], d1 = m[p[2]][p[3]];
      // Equator: the other two opposite pairs, visited alternately.
      std::vector<std::array<int, 2>> opp;
      for (int k = 0; k < 3; ++k) {
        if (k == best) continue;
        const auto& q = pairs[k];
        opp.push_back({m[q[0]][q[1]], m[q[2]][q[3]]});
      }
      const std::array<int, 4> ring{opp[0][0], opp[1][0], opp[0][1], opp[1][1]};
      for (int k = 0; k < 4; ++k) push({d0, d1, ring[k], ring[(k + 1) % 4]});
    }
  }
  for (const auto& f : in.facets) {
    if (f.count == 2) {
      const int ab = mid(f.v[0], f.v[1]);
      out.facets.push_back({{f.v[0], ab, -1}, 2, f.tag});
      out.facets.push_back({{ab, f.v[1], -1}, 2, f.tag});
    } else {
      const int a = f.v[0], b = f.v[1], c = f.v[2];
      const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
      out.facets.push_back({{a, ab, ca}, 3, f.tag});
      out.facets.push_back({{ab, b, bc}, 3, f.tag});
      out.facets.push_back({{ca, bc, c}, 3, f.tag});
      out.facets.push_back({{ab, bc, ca}, 3, f.tag});
    }
  }
  return out;
}

inline SimplicialMesh triangulate(const OracleDomain& domain, int level) {
  if (level < 0) throw Error(ErrorKind::Precondition, "level must be >= 0");
  SimplicialMesh m = coarse_mesh(domain);
  for (int l = 0; l < level; ++l) m = refine(m);
  return m;
}

/// Coarse split of the cell followed by `level` red refinements; boundary
/// facets carry the index of the cell face they lie on.
inline SimplicialMesh triangulate(const Cell& cell, int level) { return triangulate(domain_from_cell(cell), level); }

// ---- assembly ------------------------------------------------------------------

struct AssembledSystem {
  SparseMatrix stiffness;
  SparseMatrix mass;
  std::map<int, Eigen::VectorXd> face_mass;  // b_Γ per tag
};

namespace detail {

/// Rows are the gradients of the barycentric coordinates.
inline Eigen::MatrixXd barycentric_gradients(const Simplex& s, int dim) {
  Eigen::MatrixXd e(dim, dim);
  for (int k = 1; k <= dim; ++k) {
    for (int i = 0; i < dim; ++i) e(i, k - 1) = s[k][i] - s[0][i];
  }
  const Eigen::MatrixXd inv = e.inverse();  // row k-1 = ∇λ_k
  Eigen::MatrixXd g(dim + 1, dim);
  g.bottomRows(dim) = inv;
  g.row(0) = -inv.colwise().sum();
  return g;
}

}  // namespace detail

inline AssembledSystem assemble(const SimplicialMesh& mesh) {
  const int n = mesh.vertex_count();
  const int d = mesh.dim;
  std::vector<Eigen::Triplet<double>> kt, mt;
  kt.reserve(mesh.simplices.size() * (d + 1) * (d + 1));
  mt.reserve(mesh.simplices.size() * (d + 1) * (d + 1));
  for (int si = 0; si < mesh.simplex_count(); ++si) {
    const Simplex s = mesh.simplex(si);
    const double vol = detail::simplex_signed_measure(s);
    if (!(vol > 0.0)) throw Error(ErrorKind::DegenerateGeometry, "inverted or degenerate simplex");
    const Eigen::MatrixXd g = detail::barycentric_gradients(s, d);
    const Eigen::MatrixXd ke = vol * g * g.transpose();
    const double mscale = vol / ((d + 1.0) * (d + 2.0));
    for (int a = 0; a <= d; ++a) {
      for (int b = 0; b <= d; ++b) {
        kt.emplace_back(mesh.simplices[si][a], mesh.simplices[si][b], ke(a, b));
        mt.emplace_back(mesh.simplices[si][a], mesh.simplices[si][b], mscale * (a == b ? 2.0 : 1.0));
      }
    }
  }
  AssembledSystem sys;
  sys.stiffness.resize(n, n);
  sys.mass.resize(n, n);
  sys.stiffness.setFromTriplets(kt.begin(), kt.end());
  sys.mass.setFromTriplets(mt.begin(), mt.end());
  for (const auto& f : mesh.facets) {
    if (f.tag < 0) continue;
    auto [it, inserted] = sys.face_mass.try_emplace(f.tag, Eigen::VectorXd::Zero(n));
    const double share = mesh.facet_measure(f) / f.count;
    for (int k = 0; k < f.count; ++k) it->second[f.v[k]] += share;
  }
  return sys;
}

/// ∫_Γ φᵢφⱼ over the facets whose tag is in `tags`.
inline SparseMatrix boundary_mass(const SimplicialMesh& mesh, const std::vector<int>& tags) {
  std::vector<Eigen::Triplet<double>> t;
  for (const auto& f : mesh.facets) {
    if (std::find(tags.begin(), tags.end(), f.tag) == tags.end()) continue;
    const double scale = mesh.facet_measure(f) / (f.count * (f.count + 1.0));
    for (int a = 0; a < f.count; ++a) {
      for (int b = 0; b < f.count; ++b) t.emplace_back(f.v[a], f.v[b], scale * (a == b ? 2.0 : 1.0));
    }
  }
  SparseMatrix m(mesh.vertex_count(), mesh.vertex_count());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

inline Eigen::VectorXd face_mass_vector(const AssembledSystem& sys, const std::vector<int>& tags, int n) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (int t : tags) {
    auto it = sys.face_mass.find(t);
    if (it == sys.face_mass.end()) throw Error(ErrorKind::InvalidFaceSelection, "face " + std::to_string(t) + " is not tagged");
    b += it->second;
  }
  return b;
}

// ---- constrained eigenproblem --------------------------------------------------

/// K u = μ B u on {u : Cᵀu = 0}; u has `blocks` components of size n sharing
/// the n×n matrices K and B (block diagonal).
struct ConstrainedProblem {
  SimplicialMesh mesh;
  SparseMatrix stiffness;
  SparseMatrix weight;
  Eigen::MatrixXd constraints;
  int blocks = 1;
  double shift = 1.0;

  int unknowns() const { return blocks * mesh.vertex_count(); }
};

struct EigenSolveOptions {
  double tolerance = 1e-10;
  int max_iterations = 3000;
  int block_size = 4;
  std::uint64_t seed = 20240611;
};

struct EigenSolveResult {
  double eigenvalue = 0.0;
  Eigen::VectorXd vector;
  int iterations = 0;
  double residual = 0.0;
  double constraint_residual = 0.0;
  bool converged = false;
};

namespace detail {

inline Eigen::MatrixXd apply_blocks(const SparseMatrix& a, const Eigen::MatrixXd& x, int blocks) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd y(x.rows(), x.cols());
  for (int b = 0; b < blocks; ++b) y.middleRows(b * n, n) = a * x.middleRows(b * n, n);
  return y;
}

}  // namespace detail

/// Euclidean projection onto {u : Cᵀu = 0}.
inline Eigen::MatrixXd project_constraints(const Eigen::MatrixXd& c, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd ctc = c.transpose() * c;
  return x - c * ctc.ldlt().solve(c.transpose() * x);
}

/// Smallest eigenpair by block inverse iteration with the fixed shift
/// A = K + αB and Rayleigh–Ritz on each iterate; constraints enter through
/// the Schur complement CᵀA⁻¹C.
inline EigenSolveResult solve_constrained(const ConstrainedProblem& p, const EigenSolveOptions& opt = {}) {
  const int n = p.mesh.vertex_count();
  const int total = p.unknowns();
  const int m = static_cast<int>(p.constraints.cols());
  if (total - m < 1) throw Error(ErrorKind::Solver, "constraint space is empty");
  const SparseMatrix a = p.stiffness + p.shift * p.weight;
  SpdFactorization ldlt(a);
  if (ldlt.info() != Eigen::Success) throw Error(ErrorKind::Solver, "factorization of K + alpha B failed");
  auto solve_a = [&](const Eigen::MatrixXd& rhs) {
    Eigen::MatrixXd y(rhs.rows(), rhs.cols());
    for (int b = 0; b < p.blocks; ++b) y.middleRows(b * n, n) = ldlt.solve(rhs.middleRows(b * n, n));
    return y;
  };
  const Eigen::MatrixXd w = solve_a(p.constraints);
  const Eigen::LDLT<Eigen::MatrixXd> schur((p.constraints.transpose() * w).eval());
  auto constrained_solve = [&](const Eigen::MatrixXd& rhs) {
    Eigen::MatrixXd y = solve_a(rhs);
    return (y - w * schur.solve(p.constraints.transpose() * y)).eval();
  };
  const int q = std::max(1, std::min(opt.block_size, total - m));
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(total, q);
  for (int j = 0; j < q; ++j) {
    for (int i = 0; i < total; ++i) x(i, j) = normal(rng);
  }
  x = project_constraints(p.constraints, x);
  EigenSolveResult res;
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opt.max_iterations; ++it) {
    Eigen::MatrixXd y = constrained_solve(detail::apply_blocks(p.weight, x, p.blocks));
    // Rayleigh–Ritz in span(y).
    const Eigen::MatrixXd ky = detail::apply_blocks(p.stiffness, y, p.blocks);
    const Eigen::MatrixXd by = detail::apply_blocks(p.weight, y, p.blocks);
    Eigen::MatrixXd kr = y.transpose() * ky;
    Eigen::MatrixXd br = y.transpose() * by;
    kr = 0.5 * (kr + kr.transpose()).eval();
    br = 0.5 * (br + br.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ritz(kr, br);
    Eigen::MatrixXd coeffs;
    Eigen::VectorXd values;
    if (ritz.info() == Eigen::Success && ritz.eigenvalues().allFinite()) {
      coeffs = ritz.eigenvectors();
      values = ritz.eigenvalues();
    } else {
      // Fall back to a single normalized vector.
      coeffs = Eigen::MatrixXd::Zero(q, 1);
      coeffs(0, 0) = 1.0 / std::sqrt(std::max(br(0, 0), 1e-300));
      values = Eigen::VectorXd::Constant(1, kr(0, 0) / std::max(br(0, 0), 1e-300));
    }
    x = y * coeffs;
    if (x.cols() < q) {
      Eigen::MatrixXd fresh(total, q);
      fresh.leftCols(x.cols()) = x;
      for (int j = static_cast<int>(x.cols()); j < q; ++j) {
        for (int i = 0; i < total; ++i) fresh(i, j) = normal(rng);
      }
      x = project_constraints(p.constraints, fresh);
    }
    const double mu = values[0];
    res.iterations = it;
    res.eigenvalue = mu;
    if (std::abs(mu - previous) <= opt.tolerance * std::abs(mu)) {
      res.converged = true;
      break;
    }
    previous = mu;
  }
  Eigen::VectorXd u = x.col(0);
  const double bn = std::sqrt(u.dot(detail::apply_blocks(p.weight, u, p.blocks).col(0)));
  if (bn > 0.0) u /= bn;
  const Eigen::VectorXd ku = detail::apply_blocks(p.stiffness, u, p.blocks).col(0);
  const Eigen::VectorXd r = ku - res.eigenvalue * detail::apply_blocks(p.weight, u, p.blocks).col(0);
  res.residual = project_constraints(p.constraints, r).norm() / std::max(ku.norm(), 1e-300);
  res.constraint_residual = (p.constraints.transpose() * u).norm() / std::max(u.norm(), 1e-300);
  res.vector = u;
  if (!res.converged) {
    throw Error(ErrorKind::Solver, "inverse iteration did not converge in " + std::to_string(opt.max_iterations) +
                                       " iterations");
  }
  return res;
}

// ---- sharp constants -------------------------------------------------------------

enum class OracleKind { Poincare, Boundary, Trace, Vector };

inline std::string to_string(OracleKind k) {
  switch (k) {
    case OracleKind::Poincare: return "cp";
    case OracleKind::Boundary: return "scalar";
    case OracleKind::Trace: return "trace";
    case OracleKind::Vector: return "vector";
  }
  return "?";
}

struct OracleOptions {
  int level = 4;
  /// First level of the convergence table; −1 means level − 1 (or 0).
  int min_level = -1;
  EigenSolveOptions solver;
};

struct LevelRow {
  int level = 0;
  int unknowns = 0;
  double eigenvalue = 0.0;
  double constant = 0.0;
  double delta = 0.0;  // relative change of the constant from the previous row
  double residual = 0.0;
  int iterations = 0;
};

struct OracleResult {
  OracleKind kind = OracleKind::Boundary;
  double constant = 0.0;
  double eigenvalue = 0.0;
  int level = 0;
  double residual = 0.0;
  double constraint_residual = 0.0;
  std::optional<double> extrapolated;
  std::vector<LevelRow> table;
  ConstrainedProblem problem;  // finest level
  Eigen::VectorXd eigenvector;
};

/// Builds the pencil and constraints for one level.  `tags` select Γ (or
/// Γ₁..Γ_d for the vector problem, with `normals` rows the matching normals).
inline ConstrainedProblem build_problem(const OracleDomain& domain, OracleKind kind, const std::vector<int>& tags,
                                        const Eigen::MatrixXd& normals, int level) {
  ConstrainedProblem p;
  p.mesh = triangulate(domain, level);
  const int n = p.mesh.vertex_count();
  if (n < 3) throw Error(ErrorKind::Precondition, "level yields fewer than 3 vertices");
  AssembledSystem sys = assemble(p.mesh);
  p.stiffness = std::move(sys.stiffness);
  const double d = domain.diameter;
  switch (kind) {
    case OracleKind::Poincare:
      p.weight = sys.mass;
      p.constraints = sys.mass * Eigen::VectorXd::Ones(n);
      p.shift = 1.0 / (d * d);
      break;
    case OracleKind::Boundary:
      p.weight = sys.mass;
      p.constraints = face_mass_vector(sys, tags, n);
      p.shift = 1.0 / (d * d);
      break;
    case OracleKind::Trace:
      p.weight = boundary_mass(p.mesh, tags);
      p.constraints = face_mass_vector(sys, tags, n);
      p.shift = 1.0 / d;
      break;
    case OracleKind::Vector: {
      const int dim = domain.dim;
      if (static_cast<int>(tags.size()) != dim || normals.rows() != dim || normals.cols() < dim) {
        throw Error(ErrorKind::InvalidFaceSelection, "vector oracle needs d faces and d normals");
      }
      if (std::abs(normals.topLeftCorner(dim, dim).determinant()) <= kDetTolerance) {
        throw Error(ErrorKind::DependentNormals, "selected normals are linearly dependent");
      }
      p.weight = sys.mass;
      p.blocks = dim;
      p.constraints = Eigen::MatrixXd::Zero(dim * n, dim);
      for (int i = 0; i < dim; ++i) {
        const Eigen::VectorXd b = face_mass_vector(sys, {tags[i]}, n);
        for (int j = 0; j < dim; ++j) p.constraints.block(j * n, i, n, 1) = normals(i, j) * b;
      }
      p.shift = 1.0 / (d * d);
      break;
    }
  }
  return p;
}

/// Sharp constant over a range of levels with Richardson extrapolation of the
/// eigenvalue from the two finest levels, (4μ_L − μ_{L−1})/3.
inline OracleResult sharp_constant(const OracleDomain& domain, OracleKind kind, const std::vector<int>& tags,
                                   const Eigen::MatrixXd& normals, const OracleOptions& opt) {
  if (opt.level < 0) throw Error(ErrorKind::Precondition, "level must be >= 0");
  const int first = opt.min_level < 0 ? std::max(0, opt.level - 1) : std::min(opt.min_level, opt.level);
  OracleResult out;
  out.kind = kind;
  for (int l = first; l <= opt.level; ++l) {
    ConstrainedProblem p = build_problem(domain, kind, tags, normals, l);
    const EigenSolveResult r = solve_constrained(p, opt.solver);
    LevelRow row;
    row.level = l;
    row.unknowns = p.unknowns();
    row.eigenvalue = r.eigenvalue;
    row.constant = 1.0 / std::sqrt(r.eigenvalue);
    row.delta = out.table.empty() ? 0.0 : (row.constant - out.table.back().constant) / row.constant;
    row.residual = r.residual;
    row.iterations = r.iterations;
    out.table.push_back(row);
    if (l == opt.level) {
      out.problem = std::move(p);
      out.eigenvector = r.vector;
      out.residual = r.residual;
      out.constraint_residual = r.constraint_residual;
    }
  }
  const LevelRow& last = out.table.back();
  out.constant = last.constant;
  out.eigenvalue = last.eigenvalue;
  out.level = last.level;
  if (out.table.size() >= 2) {
    const double mu = (4.0 * last.eigenvalue - out.table[out.table.size() - 2].eigenvalue) / 3.0;
    if (mu > 0.0) out.extrapolated = 1.0 / std::sqrt(mu);
  }
  return out;
}

inline OracleResult sharp_cp(const Cell& cell, const OracleOptions& opt = {}) {
  return sharp_constant(domain_from_cell(cell), OracleKind::Poincare, {}, {}, opt);
}

inline OracleResult sharp_c_gamma(const Cell& cell, const std::vector<int>& gamma, const OracleOptions& opt = {}) {
  for (int g : gamma) cell.face(g);
  return sharp_constant(domain_from_cell(cell), OracleKind::Boundary, gamma, {}, opt);
}

inline OracleResult sharp_trace_constant(const Cell& cell, const std::vector<int>& gamma, const OracleOptions& opt = {}) {
  for (int g : gamma) cell.face(g);
  return sharp_constant(domain_from_cell(cell), OracleKind::Trace, gamma, {}, opt);
}

/// Vector constant with zero mean (mean-)normal components on d faces.
inline OracleResult sharp_vector_constant(const Cell& cell, const std::vector<int>& faces, const OracleOptions& opt = {}) {
  const NormalSystem ns = normal_system(cell, faces);
  return sharp_constant(domain_from_cell(cell), OracleKind::Vector, faces, ns.normals, opt);
}

/// Largest ‖u‖_B/‖∇u‖ over `n` random nodal fields projected onto the
/// constraint space.  With `seed_vector`, samples are that vector plus a
/// perturbation of relative size `spread`.
inline double rayleigh_sample(const ConstrainedProblem& p, int n, std::uint64_t seed,
                              const Eigen::VectorXd* seed_vector = nullptr, double spread = 1e-3) {
  if (n < 1) throw Error(ErrorKind::Precondition, "need at least one sample");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const int total = p.unknowns();
  double worst = 0.0;
  for (int s = 0; s < n; ++s) {
    Eigen::VectorXd u(total);
    for (int i = 0; i < total; ++i) u[i] = normal(rng);
    if (seed_vector) u = *seed_vector + spread * seed_vector->norm() / std::sqrt(static_cast<double>(total)) * u;
    u = project_constraints(p.constraints, u).col(0);
    const double num = u.dot(detail::apply_blocks(p.weight, u, p.blocks).col(0));
    const double den = u.dot(detail::apply_blocks(p.stiffness, u, p.blocks).col(0));
    if (den <= 0.0) continue;
    worst = std::max(worst, std::sqrt(std::max(0.0, num) / den));
  }
  return worst;
}

// ---- reports -------------------------------------------------------------------

inline std::string convergence_table_text(const OracleResult& r) {
  std::ostringstream os;
  os.setf(std::ios::scientific);
  os.precision(10);
  os << "level  unknowns  eigenvalue  constant  delta\n";
  for (const auto& row : r.table) {
    os << row.level << "  " << row.unknowns << "  " << row.eigenvalue << "  " << row.constant << "  " << row.delta
       << "\n";
  }
  return os.str();
}

inline std::string convergence_table_csv(const OracleResult& r) {
  std::ostringstream os;
  os.precision(17);
  os << "level,unknowns,eigenvalue,constant,delta\n";
  for (const auto& row : r.table) {
    os << row.level << "," << row.unknowns << "," << row.eigenvalue << "," << row.constant << "," << row.delta << "\n";
  }
  return os.str();
}

}  // namespace poincare
