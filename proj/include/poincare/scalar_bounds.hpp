#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "poincare/geometry.hpp"

namespace poincare {

/// Smallest positive root of J₀.
inline constexpr double kBesselJ01 = 2.404825557695773;
/// Smallest positive root of J₁.
inline constexpr double kBesselJ11 = 3.831705970207512;
/// Sharp-constant parameter for the right isosceles triangle (six digits only).
inline constexpr double kZeta = 2.02876;

enum class BoundKind { Upper, Lower, Exact };

inline std::string to_string(BoundKind k) {
  switch (k) {
    case BoundKind::Upper: return "upper";
    case BoundKind::Lower: return "lower";
    case BoundKind::Exact: return "exact";
  }
  return "?";
}

/// A value with units of length, the formula that produced it, and the
/// preconditions that formula relies on.
struct ConstantBound {
  double value = 0.0;
  BoundKind kind = BoundKind::Upper;
  std::string formula;
  std::vector<std::pair<std::string, bool>> preconditions;
};

/// Which C_P upper bound feeds the composite C_Γ formulas.
enum class CpMode { Convex, Classical, User };

struct CpChoice {
  CpMode mode = CpMode::Convex;
  double user_value = 0.0;
};

// ---- C_P ---------------------------------------------------------------

/// (3/4)·d_Ω in 3D, sqrt(7/24)·d_Ω in 2D.
inline ConstantBound cp_upper_classical(const Cell& cell) {
  const double factor = cell.dim() == 2 ? std::sqrt(7.0 / 24.0) : 0.75;
  return {factor * cell.diameter(), BoundKind::Upper, "cp-poincare-classical", {{"convex", is_convex(cell)}}};
}

/// d_Ω / π, convex cells only.
inline ConstantBound cp_upper_convex(const Cell& cell) {
  if (!is_convex(cell)) throw Error(ErrorKind::Precondition, "d/pi bound for C_P requires a convex cell");
  return {cell.diameter() / std::numbers::pi, BoundKind::Upper, "cp-payne-weinberger", {{"convex", true}}};
}

/// d_Ω / (2 j₀,₁), planar convex cells.
inline ConstantBound cp_lower_cheng(const Cell& cell) {
  if (cell.dim() != 2) throw Error(ErrorKind::Precondition, "Cheng lower bound is two-dimensional");
  return {cell.diameter() / (2.0 * kBesselJ01), BoundKind::Lower, "cp-cheng", {{"convex", is_convex(cell)}}};
}

inline bool is_triangle(const Cell& cell) {
  return cell.dim() == 2 && cell.kind() != CellKind::Macrocell && cell.vertices().size() == 3 &&
         cell.faces()[0].kind == FaceKind::Planar && cell.faces()[1].kind == FaceKind::Planar &&
         cell.faces()[2].kind == FaceKind::Planar;
}

inline bool is_isosceles(const Cell& tri) {
  if (!is_triangle(tri)) return false;
  const auto& v = tri.vertices();
  const double a = (v[1] - v[0]).norm(), b = (v[2] - v[1]).norm(), c = (v[0] - v[2]).norm();
  const double tol = kGeometryTolerance * tri.diameter();
  return std::abs(a - b) <= tol || std::abs(b - c) <= tol || std::abs(c - a) <= tol;
}

/// d_Ω / j₁,₁ for isosceles triangles.
inline ConstantBound cp_upper_isosceles(const Cell& tri) {
  if (!is_isosceles(tri)) throw Error(ErrorKind::Precondition, "isosceles bound requires an isosceles triangle");
  return {tri.diameter() / kBesselJ11, BoundKind::Upper, "cp-laugesen-siudeja", {{"isosceles", true}}};
}

inline ConstantBound cp_upper(const Cell& cell, const CpChoice& choice) {
  switch (choice.mode) {
    case CpMode::User:
      if (!(choice.user_value > 0.0)) throw Error(ErrorKind::Precondition, "user-supplied C_P must be positive");
      return {choice.user_value, BoundKind::Upper, "cp-user", {{"user-supplied", true}}};
    case CpMode::Classical:
      if (!is_convex(cell)) {
        throw Error(ErrorKind::Precondition, "nonconvex cell: composite bounds need a user-supplied C_P");
      }
      return cp_upper_classical(cell);
    case CpMode::Convex:
      break;
  }
  if (!is_convex(cell)) throw Error(ErrorKind::Precondition, "nonconvex cell: composite bounds need a user-supplied C_P");
  return cp_upper_convex(cell);
}

// ---- sharp values for simple shapes ------------------------------------------

namespace detail {

inline std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline bool all_planar(const Cell& cell) {
  return std::all_of(cell.faces().begin(), cell.faces().end(),
                     [](const Face& f) { return f.kind == FaceKind::Planar; });
}

/// Side lengths of a rectangle given as a 4-vertex polygon, or nullopt.
inline std::optional<std::array<double, 4>> rectangle_sides(const std::vector<Vec3>& v, double diam) {
  if (v.size() != 4) return std::nullopt;
  std::array<double, 4> sides{};
  for (int i = 0; i < 4; ++i) {
    const Vec3 e0 = v[(i + 1) % 4] - v[i];
    const Vec3 e1 = v[(i + 2) % 4] - v[(i + 1) % 4];
    if (std::abs(e0.dot(e1)) > kGeometryTolerance * diam * diam) return std::nullopt;
    sides[i] = e0.norm();
  }
  return sides;
}

}  // namespace detail

/// Sharp constants for rectangles, boxes and the right isosceles triangle;
/// nullopt when the cell/Γ pair is not one of those configurations.
inline std::optional<ConstantBound> exact_table1(const Cell& cell, std::vector<int> gamma) {
  gamma = detail::sorted_unique(std::move(gamma));
  if (gamma.empty() || cell.kind() == CellKind::Macrocell || !detail::all_planar(cell)) return std::nullopt;
  for (int g : gamma) cell.face(g);
  const double c1 = 1.0 / std::numbers::pi;
  const double c2 = 1.0 / kZeta;
  auto exact = [](double value, std::string formula) {
    return ConstantBound{value, BoundKind::Exact, std::move(formula), {}};
  };
  const double diam = cell.diameter();
  if (cell.dim() == 2 && cell.vertices().size() == 4) {
    const auto sides = detail::rectangle_sides(cell.vertices(), diam);
    if (!sides) return std::nullopt;
    if (gamma.size() == 4) return exact(c1 * std::max((*sides)[0], (*sides)[1]), "table1-rectangle-boundary");
    if (gamma.size() == 1) {
      const double along = (*sides)[gamma[0]];
      const double across = (*sides)[(gamma[0] + 1) % 4];
      return exact(c1 * std::max(2.0 * across, along), "table1-rectangle-side");
    }
    return std::nullopt;
  }
  if (cell.dim() == 2 && cell.vertices().size() == 3) {
    const auto& v = cell.vertices();
    const double tol = kGeometryTolerance * diam;
    for (int r = 0; r < 3; ++r) {
      const Vec3 e1 = v[(r + 1) % 3] - v[r], e2 = v[(r + 2) % 3] - v[r];
      if (std::abs(e1.dot(e2)) > tol * diam || std::abs(e1.norm() - e2.norm()) > tol) continue;
      const double h = e1.norm();
      // Faces adjacent to the right-angle vertex r are r and r+2; the hypotenuse is r+1.
      const int leg_a = r, leg_b = (r + 2) % 3, hyp = (r + 1) % 3;
      if (gamma.size() == 1 && (gamma[0] == leg_a || gamma[0] == leg_b)) return exact(c2 * h, "table1-triangle-leg");
      if (gamma.size() == 2 && gamma == detail::sorted_unique({leg_a, leg_b})) {
        return exact(c1 * h, "table1-triangle-two-legs");
      }
      if (gamma.size() == 1 && gamma[0] == hyp) {
        return exact(std::sqrt(2.0) * c2 * h, "table1-triangle-hypotenuse");
      }
      return std::nullopt;
    }
    return std::nullopt;
  }
  if (cell.dim() == 3 && cell.kind() == CellKind::Prism && cell.vertices().size() == 8 && gamma.size() == 1) {
    const auto& hs = cell.heights();
    if (std::any_of(hs.begin(), hs.end(), [&](double h) { return std::abs(h - hs[0]) > kGeometryTolerance * diam; })) {
      return std::nullopt;
    }
    const std::vector<Vec3> base(cell.vertices().begin(), cell.vertices().begin() + 4);
    const auto sides = detail::rectangle_sides(base, diam);
    if (!sides) return std::nullopt;
    const double a = (*sides)[0], b = (*sides)[1], height = hs[0];
    const int g = gamma[0];
    double across, f1, f2;
    if (g <= 1) {
      across = height, f1 = a, f2 = b;
    } else {
      const int side = g - 2;
      across = (*sides)[(side + 1) % 4], f1 = (*sides)[side], f2 = height;
    }
    return exact(c1 * std::max({2.0 * across, f1, f2}), "table1-box-face");
  }
  return std::nullopt;
}

// ---- flux-field majorant ------------------------------------------------------

/// Piecewise-affine vector field: one affine piece per simplex, given by its
/// values at the simplex vertices.
struct FluxPiece {
  Simplex simplex;
  std::vector<Vec3> values;
};

struct FluxField {
  std::vector<FluxPiece> pieces;
};

/// Samples `tau` at the vertices of the cell's simplex decomposition.
template <class F>
FluxField sample_flux_field(const Cell& cell, F&& tau) {
  FluxField field;
  for (auto& s : simplex_decomposition(cell)) {
    FluxPiece piece{s, {}};
    for (const auto& p : s) piece.values.push_back(tau(p));
    field.pieces.push_back(std::move(piece));
  }
  return field;
}

/// τ(x) = (x − apex)/h: the affine field of a cone over Γ (triangle,
/// tetrahedron, pyramid with apex O).  τ·n = 1 on Γ and 0 on the lateral faces.
inline FluxField cone_flux_field(const Cell& cell, int gamma) {
  Vec3 apex;
  if (cell.kind() == CellKind::Pyramid) {
    if (gamma != 0) throw Error(ErrorKind::Precondition, "pyramid cone field needs Γ = base");
    apex = cell.vertices()[4];
  } else if (is_triangle(cell) || cell.kind() == CellKind::Tetrahedron) {
    apex = opposite_vertex(cell, gamma);
  } else {
    throw Error(ErrorKind::Precondition, "cone flux field needs a triangle, tetrahedron or pyramid");
  }
  const Vec3 n = outward_unit_normal(cell, gamma);
  const Vec3 on_gamma = cell.vertices()[cell.face(gamma).vertices[0]];
  const double h = (on_gamma - apex).dot(n);
  return sample_flux_field(cell, [&](const Vec3& x) -> Vec3 { return (x - apex) / h; });
}

/// τ = (0, 0, x₃/H − 1) on a prism of constant height H, Γ = base.
inline FluxField prism_flux_field(const Cell& prism) {
  if (prism.kind() != CellKind::Prism) throw Error(ErrorKind::Precondition, "prism flux field needs a prism");
  const auto& hs = prism.heights();
  const double height = hs[0];
  if (std::any_of(hs.begin(), hs.end(), [&](double h) { return std::abs(h - height) > 1e-12 * height; })) {
    throw Error(ErrorKind::Precondition, "affine prism flux field needs constant height");
  }
  const double z0 = prism.vertices()[0].z();
  return sample_flux_field(prism, [&](const Vec3& x) -> Vec3 { return Vec3(0, 0, (x.z() - z0) / height - 1.0); });
}

/// Center and radius of the ball touching every face plane of a cell with
/// planar faces, if the cell is tangential (triangles, tetrahedra, squares,
/// cubes, regular polygons, ...).
inline std::optional<std::pair<Vec3, double>> tangential_center(const Cell& cell) {
  const int d = cell.dim();
  const int nf = cell.face_count();
  for (const auto& f : cell.faces()) {
    if (f.kind != FaceKind::Planar) return std::nullopt;
  }
  // n_f·(p_f − c) = r for every face: nf equations in (c, r).
  Eigen::MatrixXd a(nf, d + 1);
  Eigen::VectorXd rhs(nf);
  for (int f = 0; f < nf; ++f) {
    const Vec3 n = outward_unit_normal(cell, f);
    const Vec3 p = cell.vertices()[cell.face(f).vertices[0]];
    for (int j = 0; j < d; ++j) a(f, j) = n[j];
    a(f, d) = 1.0;
    rhs[f] = n.dot(p);
  }
  const Eigen::VectorXd sol = a.colPivHouseholderQr().solve(rhs);
  if ((a * sol - rhs).norm() > 1e-10 * cell.diameter()) return std::nullopt;
  const double r = sol[d];
  if (!(r > 0.0)) return std::nullopt;
  Vec3 c = Vec3::Zero();
  for (int j = 0; j < d; ++j) c[j] = sol[j];
  return std::make_pair(c, r);
}

/// τ(x) = (x − c)/r with c, r the inscribed ball: τ·n = 1 on the whole boundary.
inline FluxField incircle_flux_field(const Cell& cell) {
  const auto ball = tangential_center(cell);
  if (!ball) throw Error(ErrorKind::Precondition, "inscribed-ball flux field needs a tangential cell with planar faces");
  const auto [center, r] = *ball;
  return sample_flux_field(cell, [&](const Vec3& x) -> Vec3 { return (x - center) / r; });
}

namespace detail {

/// Outward normal of the facet of `s` opposite vertex k.
inline Vec3 simplex_facet_normal(const Simplex& s, int k) {
  Simplex f;
  for (int i = 0; i < static_cast<int>(s.size()); ++i) {
    if (i != k) f.push_back(s[i]);
  }
  Vec3 n;
  if (f.size() == 2) {
    const Vec3 t = f[1] - f[0];
    n = Vec3(t.y(), -t.x(), 0.0);
  } else {
    n = (f[1] - f[0]).cross(f[2] - f[0]);
  }
  if (n.dot(f[0] - s[k]) < 0.0) n = -n;
  return n.normalized();
}

inline double flux_piece_divergence(const FluxPiece& p) {
  const int d = static_cast<int>(p.simplex.size()) - 1;
  Eigen::MatrixXd e(d, d), v(d, d);
  for (int k = 1; k <= d; ++k) {
    for (int i = 0; i < d; ++i) {
      e(i, k - 1) = p.simplex[k][i] - p.simplex[0][i];
      v(i, k - 1) = p.values[k][i] - p.values[0][i];
    }
  }
  return (v * e.inverse()).trace();
}

}  // namespace detail

/// Checks div τ = |Γ|/|Ω| on every piece, τ·n = 1 on Γ, τ·n = 0 on ∂Ω∖Γ and
/// continuity of τ·n across interior facets.  Throws InvalidFlux otherwise.
inline void verify_flux_field(const Cell& cell, const std::vector<int>& gamma, const FluxField& field,
                              double tol = 1e-8) {
  if (field.pieces.empty()) throw Error(ErrorKind::InvalidFlux, "empty flux field");
  double gamma_measure = 0.0;
  for (int g : gamma) gamma_measure += measure(cell, g);
  const double target = gamma_measure / cell.measure();
  double piece_measure = 0.0;
  double scale = 1.0;
  for (const auto& p : field.pieces) {
    for (const auto& v : p.values) scale = std::max(scale, v.norm());
  }
  struct FacetUse {
    int piece;
    int opposite;
  };
  std::map<std::vector<Vec3>, std::vector<FacetUse>, std::function<bool(const std::vector<Vec3>&, const std::vector<Vec3>&)>>
      facets([](const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), detail::Vec3Less{});
      });
  for (int pi = 0; pi < static_cast<int>(field.pieces.size()); ++pi) {
    const auto& p = field.pieces[pi];
    if (p.values.size() != p.simplex.size() || static_cast<int>(p.simplex.size()) != cell.dim() + 1) {
      throw Error(ErrorKind::InvalidFlux, "flux piece needs one value per simplex vertex");
    }
    piece_measure += detail::simplex_measure(p.simplex);
    const double div = detail::flux_piece_divergence(p);
    if (std::abs(div - target) > tol * std::max(1.0, target)) {
      throw Error(ErrorKind::InvalidFlux, "div tau = " + std::to_string(div) + " differs from |Γ|/|Ω| = " +
                                              std::to_string(target));
    }
    for (int k = 0; k < static_cast<int>(p.simplex.size()); ++k) {
      std::vector<Vec3> key;
      for (int i = 0; i < static_cast<int>(p.simplex.size()); ++i) {
        if (i != k) key.push_back(p.simplex[i]);
      }
      facets[detail::sorted_points(key)].push_back({pi, k});
    }
  }
  if (std::abs(piece_measure - cell.measure()) > 1e-9 * cell.measure()) {
    throw Error(ErrorKind::InvalidFlux, "flux pieces do not tile the cell");
  }
  auto value_at = [&](const FluxPiece& p, const Vec3& x) -> Vec3 {
    for (std::size_t i = 0; i < p.simplex.size(); ++i) {
      if (p.simplex[i] == x) return p.values[i];
    }
    return Vec3::Constant(std::nan(""));
  };
  for (const auto& [pts, uses] : facets) {
    if (uses.size() == 2) {
      const auto& pa = field.pieces[uses[0].piece];
      const auto& pb = field.pieces[uses[1].piece];
      const Vec3 n = detail::simplex_facet_normal(pa.simplex, uses[0].opposite);
      for (const auto& x : pts) {
        if (std::abs((value_at(pa, x) - value_at(pb, x)).dot(n)) > tol * scale) {
          throw Error(ErrorKind::InvalidFlux, "normal component of tau jumps across an interior facet");
        }
      }
      continue;
    }
    if (uses.size() != 1) throw Error(ErrorKind::InvalidFlux, "non-conforming flux pieces");
    const auto& p = field.pieces[uses[0].piece];
    const Vec3 n = detail::simplex_facet_normal(p.simplex, uses[0].opposite);
    const auto face = face_containing(cell, pts);
    if (!face) throw Error(ErrorKind::InvalidFlux, "flux piece facet is neither interior nor on a cell face");
    const bool on_gamma = std::find(gamma.begin(), gamma.end(), *face) != gamma.end();
    const double expected = on_gamma ? 1.0 : 0.0;
    for (const auto& x : pts) {
      if (std::abs(value_at(p, x).dot(n) - expected) > tol * scale) {
        throw Error(ErrorKind::InvalidFlux, std::string("tau.n must be ") + (on_gamma ? "1 on Γ" : "0 off Γ") +
                                                " (face " + std::to_string(*face) + ")");
      }
    }
  }
}

/// Exact ‖τ‖²: ∫_T |τ|² = |T|/((d+1)(d+2)) (Σ|τᵢ|² + |Στᵢ|²) for affine τ.
inline double flux_norm_squared(const FluxField& field) {
  double total = 0.0;
  for (const auto& p : field.pieces) {
    const double d = static_cast<double>(p.simplex.size()) - 1.0;
    double sq = 0.0;
    Vec3 sum = Vec3::Zero();
    for (const auto& v : p.values) {
      sq += v.squaredNorm();
      sum += v;
    }
    total += detail::simplex_measure(p.simplex) / ((d + 1.0) * (d + 2.0)) * (sq + sum.squaredNorm());
  }
  return total;
}

/// sqrt(C_P² + |Ω|/|Γ|² · ‖τ‖²) for an admissible flux field τ.
inline ConstantBound c_gamma_majorant_generic(const Cell& cell, const std::vector<int>& gamma, const FluxField& tau,
                                              const ConstantBound& cp) {
  verify_flux_field(cell, gamma, tau);
  double gm = 0.0;
  for (int g : gamma) gm += measure(cell, g);
  const double value = std::sqrt(cp.value * cp.value + cell.measure() / (gm * gm) * flux_norm_squared(tau));
  auto pre = cp.preconditions;
  pre.emplace_back("flux-admissible", true);
  return {value, BoundKind::Upper, "cgamma-flux-majorant[" + cp.formula + "]", std::move(pre)};
}

// ---- closed-form C_Γ bounds -------------------------------------------------------

/// sqrt(C_P² + h² Σ_αβ / 24), Γ an edge of the triangle.
inline ConstantBound c_gamma_triangle(const Cell& tri, int gamma, const CpChoice& cp_choice = {}) {
  if (!is_triangle(tri)) throw Error(ErrorKind::Precondition, "c_gamma_triangle needs a triangle");
  const ConstantBound cp = cp_upper(tri, cp_choice);
  const auto& fv = tri.face(gamma).vertices;
  const Vec3 a = tri.vertices()[fv[0]], c = tri.vertices()[fv[1]], b = opposite_vertex(tri, gamma);
  const double sigma = sigma_alpha_beta(a, b, c);
  const double h = 2.0 * tri.measure() / (c - a).norm();
  const double value = std::sqrt(cp.value * cp.value + h * h * sigma / 24.0);
  return {value, BoundKind::Upper, "cgamma-triangle[" + cp.formula + "]", cp.preconditions};
}

/// d_Ω / (2 j₀,₁): a lower bound of C_Γ for every Γ of a planar convex cell.
inline ConstantBound c_gamma_lower(const Cell& cell) {
  ConstantBound b = cp_lower_cheng(cell);
  b.formula = "cgamma-lower-cheng";
  return b;
}

/// Split of a quadrilateral with Γ = face g into Ω₁ = triangle(Γ, apex) and
/// the remaining triangle Ω₂.  `apex` is a vertex index not on Γ.
struct QuadSplit {
  int apex = -1;
};

namespace detail {

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) { return 0.5 * (b - a).cross(c - a).norm(); }

}  // namespace detail

/// sqrt(C_P² + (κ C_P + Σ_αβ^{1/2} |Ω| / (√6 |Γ|))²), κ² = |Ω₂|/|Ω₁|, for a
/// cell Ω = Ω₁ ∪ Ω₂ where Ω₁ is a triangle with Γ as an edge and Ω₂ touches
/// Ω₁ along one other edge only.
inline ConstantBound c_gamma_triangle_extension(const Cell& cell, const Vec3& g0, const Vec3& g1, const Vec3& apex,
                                                const ConstantBound& cp) {
  const double omega1 = detail::triangle_area(g0, apex, g1);
  if (!(omega1 > 0.0)) throw Error(ErrorKind::InvalidSplit, "Ω₁ is degenerate");
  const double omega2 = cell.measure() - omega1;
  if (omega2 < -1e-12 * cell.measure()) throw Error(ErrorKind::InvalidSplit, "Ω₁ is larger than the cell");
  const double kappa = std::sqrt(std::max(0.0, omega2) / omega1);
  const double sigma = sigma_alpha_beta(g0, apex, g1);
  const double gamma_len = (g1 - g0).norm();
  const double flux_term = std::sqrt(sigma) * cell.measure() / (std::sqrt(6.0) * gamma_len);
  const double inner = kappa * cp.value + flux_term;
  const double value = std::sqrt(cp.value * cp.value + inner * inner);
  return {value, BoundKind::Upper, "cgamma-quadrilateral[" + cp.formula + "]", cp.preconditions};
}

/// Candidate splits of a quadrilateral for Γ = face `gamma`, valid ones only.
inline std::vector<QuadSplit> quadrilateral_splits(const Cell& quad, int gamma) {
  const auto& v = quad.vertices();
  const auto& fv = quad.face(gamma).vertices;
  std::vector<QuadSplit> out;
  for (int apex = 0; apex < 4; ++apex) {
    if (apex == fv[0] || apex == fv[1]) continue;
    const int other = 6 - fv[0] - fv[1] - apex;
    const double a1 = detail::triangle_area(v[fv[0]], v[apex], v[fv[1]]);
    // The remaining triangle is the one spanned by the non-Γ vertices and the Γ end the diagonal leaves.
    int shared_end = -1;
    for (int e : fv) {
      if (std::abs(e - apex) == 2) shared_end = e;
    }
    if (shared_end < 0) continue;
    const double a2 = detail::triangle_area(v[apex], v[other], v[shared_end]);
    if (a1 > 0.0 && a2 > 0.0 && std::abs(a1 + a2 - quad.measure()) <= 1e-9 * quad.measure()) out.push_back({apex});
  }
  return out;
}

inline ConstantBound c_gamma_quadrilateral(const Cell& quad, int gamma, std::optional<QuadSplit> split,
                                           const ConstantBound& cp) {
  if (quad.dim() != 2 || quad.vertices().size() != 4 || quad.kind() == CellKind::Macrocell) {
    throw Error(ErrorKind::Precondition, "c_gamma_quadrilateral needs a quadrilateral");
  }
  const auto splits = quadrilateral_splits(quad, gamma);
  const auto& v = quad.vertices();
  const auto& fv = quad.face(gamma).vertices;
  if (split) {
    if (std::none_of(splits.begin(), splits.end(), [&](const QuadSplit& s) { return s.apex == split->apex; })) {
      throw Error(ErrorKind::InvalidSplit, "requested split does not divide the quadrilateral into two triangles");
    }
  } else {
    if (splits.empty()) throw Error(ErrorKind::InvalidSplit, "no valid diagonal split");
    // Largest Ω₁ (smallest κ).
    split = *std::max_element(splits.begin(), splits.end(), [&](const QuadSplit& a, const QuadSplit& b) {
      return detail::triangle_area(v[fv[0]], v[a.apex], v[fv[1]]) < detail::triangle_area(v[fv[0]], v[b.apex], v[fv[1]]);
    });
  }
  return c_gamma_triangle_extension(quad, v[fv[0]], v[fv[1]], v[split->apex], cp);
}

inline ConstantBound c_gamma_quadrilateral(const Cell& quad, int gamma, const CpChoice& cp_choice = {}) {
  return c_gamma_quadrilateral(quad, gamma, std::nullopt, cp_upper(quad, cp_choice));
}

/// sqrt(d²/π² + (|η|²+|ζ|²+|σ|²+η·ζ+η·σ+ζ·σ)/90), η, ζ, σ the edges from
/// the apex to the vertices of Γ.
inline ConstantBound c_gamma_tetrahedron(const Cell& tet, int gamma) {
  if (tet.kind() != CellKind::Tetrahedron) throw Error(ErrorKind::Precondition, "c_gamma_tetrahedron needs a tetrahedron");
  const Vec3 apex = opposite_vertex(tet, gamma);
  const auto& fv = tet.face(gamma).vertices;
  const Vec3 eta = tet.vertices()[fv[0]] - apex;
  const Vec3 zeta = tet.vertices()[fv[1]] - apex;
  const Vec3 sigma = tet.vertices()[fv[2]] - apex;
  const double s = eta.squaredNorm() + zeta.squaredNorm() + sigma.squaredNorm() + eta.dot(zeta) + eta.dot(sigma) +
                   zeta.dot(sigma);
  const double d = tet.diameter();
  const double value = std::sqrt(d * d / (std::numbers::pi * std::numbers::pi) + s / 90.0);
  return {value, BoundKind::Upper, "cgamma-tetrahedron", {{"convex", true}}};
}

/// Pyramid OABCD, Γ = base ABCD, triangles ABC and ACD of equal area;
/// η, ζ, σ, χ are the edges from O to A, B, C, D.
inline ConstantBound c_gamma_pyramid(const Cell& pyr, int gamma = 0) {
  if (pyr.kind() != CellKind::Pyramid) throw Error(ErrorKind::Precondition, "c_gamma_pyramid needs a pyramid");
  if (gamma != 0) throw Error(ErrorKind::Precondition, "pyramid bound is for Γ = base");
  if (!is_convex(pyr)) throw Error(ErrorKind::Precondition, "pyramid bound uses d/pi and needs a convex pyramid");
  const auto& v = pyr.vertices();
  const double abc = detail::triangle_area(v[0], v[1], v[2]);
  const double acd = detail::triangle_area(v[0], v[2], v[3]);
  if (std::abs(abc - acd) > 1e-8 * std::max(abc, acd)) {
    throw Error(ErrorKind::Precondition, "pyramid bound needs base triangles ABC and ACD of equal area");
  }
  const Vec3 eta = v[0] - v[4], zeta = v[1] - v[4], sigma = v[2] - v[4], chi = v[3] - v[4];
  const double s = 2.0 * eta.squaredNorm() + zeta.squaredNorm() + 2.0 * sigma.squaredNorm() + chi.squaredNorm() +
                   2.0 * eta.dot(sigma) + (eta + sigma).dot(chi + zeta);
  const double d = pyr.diameter();
  const double value = std::sqrt(d * d / (std::numbers::pi * std::numbers::pi) + s / 180.0);
  return {value, BoundKind::Upper, "cgamma-pyramid", {{"convex", true}, {"equal-base-split", true}}};
}

/// Mean height ⟨H⟩_Γ over the prism base and the minimum height.
inline std::pair<double, double> prism_height_stats(const Cell& prism) {
  const auto& hs = prism.heights();
  const auto& v = prism.vertices();
  const int n = static_cast<int>(hs.size());
  double integral = 0.0, area = 0.0;
  for (int i = 1; i + 1 < n; ++i) {
    const double a = detail::triangle_area(v[0], v[i], v[i + 1]);
    integral += a * (hs[0] + hs[i] + hs[i + 1]) / 3.0;
    area += a;
  }
  return {integral / area, *std::min_element(hs.begin(), hs.end())};
}

/// sqrt(C_P² + (⟨H⟩_Γ/√3 + C_P κ)²), κ = (⟨H⟩_Γ/H_min − 1)^{1/2}, Γ = base.
inline ConstantBound c_gamma_prism(const Cell& prism, const CpChoice& cp_choice = {}) {
  if (prism.kind() != CellKind::Prism) throw Error(ErrorKind::Precondition, "c_gamma_prism needs a prism");
  const auto [mean_h, min_h] = prism_height_stats(prism);
  if (!(min_h > 0.0)) throw Error(ErrorKind::Precondition, "H_min must be positive");
  const ConstantBound cp = cp_upper(prism, cp_choice);
  const double kappa = std::sqrt(std::max(0.0, mean_h / min_h - 1.0));
  const double inner = mean_h / std::sqrt(3.0) + cp.value * kappa;
  return {std::sqrt(cp.value * cp.value + inner * inner), BoundKind::Upper, "cgamma-prism[" + cp.formula + "]",
          cp.preconditions};
}

/// sqrt((d_Γ² + (1 + π²/3) H²)/π²) for a constant-height prism over a convex base.
inline ConstantBound c_gamma_prism_constant_height(const Cell& prism) {
  if (prism.kind() != CellKind::Prism) throw Error(ErrorKind::Precondition, "needs a prism");
  const auto& hs = prism.heights();
  const double height = hs[0];
  if (std::any_of(hs.begin(), hs.end(), [&](double h) { return std::abs(h - height) > 1e-12 * height; })) {
    throw Error(ErrorKind::Precondition, "constant-height form needs H = const");
  }
  if (!is_convex(prism)) throw Error(ErrorKind::Precondition, "constant-height form needs a convex base");
  const int n = static_cast<int>(hs.size());
  double d_gamma = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) d_gamma = std::max(d_gamma, (prism.vertices()[i] - prism.vertices()[j]).norm());
  }
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double value = std::sqrt((d_gamma * d_gamma + (1.0 + pi2 / 3.0) * height * height) / pi2);
  return {value, BoundKind::Upper, "cgamma-prism-constant-height", {{"convex", true}, {"constant-height", true}}};
}

// ---- dispatch --------------------------------------------------------------

/// Every bound on C_Γ this library can state for the cell and Γ, in a fixed
/// order: exact value, closed-form upper bounds, flux majorants, lower bound.
inline std::vector<ConstantBound> applicable_c_gamma_bounds(const Cell& cell, std::vector<int> gamma,
                                                            const CpChoice& cp_choice = {}) {
  gamma = detail::sorted_unique(std::move(gamma));
  for (int g : gamma) cell.face(g);
  std::vector<ConstantBound> out;
  auto attempt = [&](auto&& fn) {
    try {
      out.push_back(fn());
    } catch (const Error&) {
    }
  };
  if (auto ex = exact_table1(cell, gamma)) out.push_back(*ex);
  const bool single = gamma.size() == 1;
  const bool whole_boundary = static_cast<int>(gamma.size()) == cell.face_count();
  if (single && is_triangle(cell)) attempt([&] { return c_gamma_triangle(cell, gamma[0], cp_choice); });
  if (single && cell.dim() == 2 && cell.vertices().size() == 4 && cell.kind() != CellKind::Macrocell &&
      detail::all_planar(cell)) {
    attempt([&] { return c_gamma_quadrilateral(cell, gamma[0], cp_choice); });
  }
  if (single && cell.kind() == CellKind::Tetrahedron) attempt([&] { return c_gamma_tetrahedron(cell, gamma[0]); });
  if (single && cell.kind() == CellKind::Pyramid && gamma[0] == 0) {
    attempt([&] { return c_gamma_pyramid(cell, 0); });
    attempt([&] { return c_gamma_majorant_generic(cell, gamma, cone_flux_field(cell, 0), cp_upper(cell, cp_choice)); });
  }
  if (single && cell.kind() == CellKind::Prism && gamma[0] == 0) {
    attempt([&] { return c_gamma_prism(cell, cp_choice); });
    attempt([&] { return c_gamma_prism_constant_height(cell); });
  }
  if (whole_boundary && cell.kind() != CellKind::Macrocell && tangential_center(cell)) {
    attempt([&] { return c_gamma_majorant_generic(cell, gamma, incircle_flux_field(cell), cp_upper(cell, cp_choice)); });
  }
  if (cell.dim() == 2) attempt([&] { return c_gamma_lower(cell); });
  return out;
}

/// Smallest available upper (or exact) bound on C_Γ.
inline ConstantBound best_c_gamma_upper(const Cell& cell, const std::vector<int>& gamma, const CpChoice& cp_choice = {}) {
  std::optional<ConstantBound> best;
  for (auto& b : applicable_c_gamma_bounds(cell, gamma, cp_choice)) {
    if (b.kind == BoundKind::Lower) continue;
    if (!best || b.value < best->value) best = b;
  }
  if (!best) {
    throw Error(ErrorKind::Precondition,
                "no closed-form bound applies to this cell/Γ; the generic majorant requires a flux field");
  }
  return *best;
}

/// Smallest available upper bound on C_P.
inline ConstantBound best_cp_upper(const Cell& cell) {
  std::vector<ConstantBound> c;
  c.push_back(cp_upper_classical(cell));
  if (is_convex(cell)) c.push_back(cp_upper_convex(cell));
  if (is_isosceles(cell)) c.push_back(cp_upper_isosceles(cell));
  if (!is_convex(cell)) {
    throw Error(ErrorKind::Precondition, "no C_P upper bound for nonconvex cells; supply one");
  }
  return *std::min_element(c.begin(), c.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
}

}  // namespace poincare
