#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "poincare/geometry.hpp"
#include "poincare/scalar_bounds.hpp"

namespace poincare {

/// Constant of the vector inequality ‖v‖ ≤ ℂ‖∇v‖ under zero mean normal
/// components on d faces.
struct VectorConstant {
  double value = 0.0;
  std::vector<ConstantBound> scalar_constants_used;
  double lambda_min = 0.0;
  std::string formula;
};

namespace detail {

inline double max_value(const std::vector<ConstantBound>& cs) {
  if (cs.empty()) throw Error(ErrorKind::Precondition, "no scalar constants given");
  double m = 0.0;
  for (const auto& c : cs) {
    if (!(c.value > 0.0)) throw Error(ErrorKind::Precondition, "scalar constants must be positive");
    m = std::max(m, c.value);
  }
  return m;
}

}  // namespace detail

/// max{c1, c2}·sqrt((1 + |cos β|)/(1 − |cos β|)), β the angle between the two normals.
inline VectorConstant vector_constant_2d(const ConstantBound& c1, const ConstantBound& c2, double beta) {
  if (!(beta > 0.0 && beta < std::numbers::pi) || std::abs(std::sin(beta)) <= kDetTolerance) {
    throw Error(ErrorKind::DependentNormals, "beta must lie in (0, pi) with |sin beta| > 1e-9");
  }
  const double c = std::abs(std::cos(beta));
  const double lambda = 1.0 - c;
  VectorConstant vc;
  vc.scalar_constants_used = {c1, c2};
  vc.value = detail::max_value(vc.scalar_constants_used) * std::sqrt((1.0 + c) / lambda);
  vc.lambda_min = lambda;
  vc.formula = "vector-2d";
  return vc;
}

/// max_k{C_Γk}·sqrt(d/λ₁), λ₁ the smallest eigenvalue of T = Σ n⁽ᵏ⁾⊗n⁽ᵏ⁾.
inline VectorConstant vector_constant_general(const std::vector<ConstantBound>& constants, const NormalSystem& ns) {
  if (!ns.valid) throw Error(ErrorKind::DependentNormals, "normal system is not valid");
  if (static_cast<int>(constants.size()) != ns.dim) {
    throw Error(ErrorKind::Precondition, "need one scalar constant per normal");
  }
  const TMatrix t = t_matrix(ns);
  VectorConstant vc;
  vc.scalar_constants_used = constants;
  vc.lambda_min = t.lambda_min;
  vc.value = detail::max_value(constants) * std::sqrt(ns.dim / t.lambda_min);
  vc.formula = "vector-general";
  return vc;
}

/// Angle between two (mean) normals.
inline double normal_angle(const Vec3& n1, const Vec3& n2) {
  const double c = std::clamp(n1.normalized().dot(n2.normalized()), -1.0, 1.0);
  return std::acos(c);
}

/// Vector constant of a cell for the selected faces using the best available
/// scalar upper bound per face.  In 2D the sharper two-normal form is used
/// unless `general` is set.
inline VectorConstant vector_constant_for_cell(const Cell& cell, const std::vector<int>& faces,
                                               const CpChoice& cp_choice = {}, bool general = false) {
  const NormalSystem ns = normal_system(cell, faces);
  std::vector<ConstantBound> cs;
  for (int f : faces) cs.push_back(best_c_gamma_upper(cell, {f}, cp_choice));
  if (cell.dim() == 2 && !general) {
    const Vec3 n1(ns.normals(0, 0), ns.normals(0, 1), 0.0), n2(ns.normals(1, 0), ns.normals(1, 1), 0.0);
    return vector_constant_2d(cs[0], cs[1], normal_angle(n1, n2));
  }
  return vector_constant_general(cs, ns);
}

/// max of the child constants.
inline ConstantBound macrocell_scalar_constant(const std::vector<ConstantBound>& children) {
  if (children.empty()) throw Error(ErrorKind::Precondition, "macrocell needs at least one child constant");
  ConstantBound out = *std::max_element(children.begin(), children.end(),
                                        [](const auto& a, const auto& b) { return a.value < b.value; });
  if (!(out.value > 0.0)) throw Error(ErrorKind::Precondition, "child constants must be positive");
  out.kind = BoundKind::Upper;
  out.formula = "macrocell-max[" + out.formula + "]";
  return out;
}

/// One group of a vector macrocell plan: the children whose union carries one
/// constant vector, and the two (child, child face) pairs that fix it.
struct PairGroup {
  std::vector<int> children;
  std::array<std::pair<int, int>, 2> faces{};
};

struct PairConstant {
  PairGroup group;
  VectorConstant constant;
};

/// Checks that groups partition the children and that each face belongs to a
/// child of its group.
inline void validate_pair_plan(const std::vector<PairGroup>& plan, int child_count) {
  if (plan.empty()) throw Error(ErrorKind::InvalidPlan, "empty pairing plan");
  std::vector<int> seen(child_count, 0);
  for (const auto& g : plan) {
    if (g.children.empty()) throw Error(ErrorKind::InvalidPlan, "pair group without subdomains");
    for (int c : g.children) {
      if (c < 0 || c >= child_count) throw Error(ErrorKind::InvalidPlan, "child index out of range");
      ++seen[c];
    }
    for (const auto& [c, f] : g.faces) {
      if (std::find(g.children.begin(), g.children.end(), c) == g.children.end()) {
        throw Error(ErrorKind::InvalidPlan, "pair face belongs to a child outside its group");
      }
    }
    if (g.faces[0] == g.faces[1]) throw Error(ErrorKind::InvalidPlan, "pair uses the same face twice");
  }
  for (int c = 0; c < child_count; ++c) {
    if (seen[c] != 1) {
      throw Error(ErrorKind::InvalidPlan, "child " + std::to_string(c) + (seen[c] ? " is in several groups" : " is not covered"));
    }
  }
}

/// max over the groups of their vector constants.
inline VectorConstant macrocell_vector_constant(const std::vector<PairConstant>& pairs, int child_count) {
  std::vector<PairGroup> plan;
  for (const auto& p : pairs) plan.push_back(p.group);
  validate_pair_plan(plan, child_count);
  VectorConstant out = pairs.front().constant;
  for (const auto& p : pairs) {
    if (p.constant.value > out.value) out = p.constant;
  }
  out.formula = "macrocell-vector-max[" + out.formula + "]";
  return out;
}

namespace detail {

/// Macro face index of (child, child face), or -1 when the child face is interior.
inline int macro_face_of(const Cell& macro, int child, int child_face) {
  for (int i = 0; i < macro.face_count(); ++i) {
    if (macro.face_owner(i) == std::make_pair(child, child_face)) return i;
  }
  return -1;
}

/// Upper bound on C_Γ(ω) where ω is the union `sub` of children and Γ a face
/// of child `owner`: the child's own bound if ω is that child, otherwise the
/// triangle-extension bound with Ω₁ = that (triangular) child.
inline ConstantBound group_scalar_bound(const Cell& sub, const std::vector<int>& members, int owner, int child_face,
                                        const Cell& owner_cell, const CpChoice& cp_choice) {
  if (members.size() == 1) return best_c_gamma_upper(owner_cell, {child_face}, cp_choice);
  if (!is_triangle(owner_cell)) {
    throw Error(ErrorKind::Precondition, "composite pair bound needs the face owner to be a triangle");
  }
  (void)owner;
  const auto& fv = owner_cell.face(child_face).vertices;
  const Vec3 g0 = owner_cell.vertices()[fv[0]], g1 = owner_cell.vertices()[fv[1]];
  return c_gamma_triangle_extension(sub, g0, g1, opposite_vertex(owner_cell, child_face), cp_upper(sub, cp_choice));
}

}  // namespace detail

/// Sub-macrocell formed by the given children.
inline Cell group_cell(const Cell& macro, const std::vector<int>& members) {
  if (members.size() == 1) return macro.children().at(members[0]);
  std::vector<Cell> cs;
  for (int c : members) cs.push_back(macro.children().at(c));
  return Cell::macrocell(std::move(cs));
}

/// ℂ for one group: scalar bounds on the group's union for both faces combined
/// with the angle between the two face normals.
inline PairConstant pair_vector_constant(const Cell& macro, const PairGroup& group, const CpChoice& cp_choice = {}) {
  if (macro.dim() != 2) throw Error(ErrorKind::Precondition, "vector macrocell pairing is two-dimensional");
  const Cell sub = group_cell(macro, group.children);
  std::vector<ConstantBound> cs;
  std::vector<Vec3> normals;
  for (const auto& [child, face] : group.faces) {
    const Cell& owner = macro.children().at(child);
    normals.push_back(mean_normal(owner, face));
    cs.push_back(detail::group_scalar_bound(sub, group.children, child, face, owner, cp_choice));
  }
  const double det = normals[0].x() * normals[1].y() - normals[0].y() * normals[1].x();
  if (std::abs(det) <= kDetTolerance * normals[0].norm() * normals[1].norm()) {
    throw Error(ErrorKind::DependentNormals, "pair normals are parallel");
  }
  return {group, vector_constant_2d(cs[0], cs[1], normal_angle(normals[0], normals[1]))};
}

/// Greedy plan for a 2D macrocell: each child is grouped with an unassigned
/// neighbour, taking the pair of macro-boundary faces with the largest |sin β|.
/// A leftover child (odd count) uses two of its own boundary faces.
inline std::vector<PairGroup> greedy_pair_plan(const Cell& macro) {
  if (macro.kind() != CellKind::Macrocell || macro.dim() != 2) {
    throw Error(ErrorKind::InvalidPlan, "automatic pairing needs a 2D macrocell");
  }
  const int n = static_cast<int>(macro.children().size());
  std::vector<std::vector<int>> boundary(n);
  for (int i = 0; i < macro.face_count(); ++i) {
    const auto [c, f] = macro.face_owner(i);
    boundary[c].push_back(f);
  }
  auto neighbours = [&](int a, int b) {
    const auto& va = macro.children()[a].vertices();
    const auto& vb = macro.children()[b].vertices();
    int shared = 0;
    for (const auto& p : va) {
      for (const auto& q : vb) shared += (p - q).norm() <= kGeometryTolerance * macro.diameter();
    }
    return shared >= 2;
  };
  auto sin_between = [&](int ca, int fa, int cb, int fb) {
    const Vec3 na = mean_normal(macro.children()[ca], fa).normalized();
    const Vec3 nb = mean_normal(macro.children()[cb], fb).normalized();
    return std::abs(na.x() * nb.y() - na.y() * nb.x());
  };
  std::vector<bool> used(n, false);
  std::vector<PairGroup> plan;
  for (int a = 0; a < n; ++a) {
    if (used[a]) continue;
    double best = -1.0;
    PairGroup g;
    for (int b = a + 1; b < n; ++b) {
      if (used[b] || !neighbours(a, b)) continue;
      for (int fa : boundary[a]) {
        for (int fb : boundary[b]) {
          const double s = sin_between(a, fa, b, fb);
          if (s > best) {
            best = s;
            g = PairGroup{{a, b}, {std::make_pair(a, fa), std::make_pair(b, fb)}};
          }
        }
      }
    }
    if (best < 0.0) {
      for (std::size_t i = 0; i < boundary[a].size(); ++i) {
        for (std::size_t j = i + 1; j < boundary[a].size(); ++j) {
          const double s = sin_between(a, boundary[a][i], a, boundary[a][j]);
          if (s > best) {
            best = s;
            g = PairGroup{{a}, {std::make_pair(a, boundary[a][i]), std::make_pair(a, boundary[a][j])}};
          }
        }
      }
    }
    if (best <= kDetTolerance) {
      throw Error(ErrorKind::InvalidPlan, "no valid pairing for child " + std::to_string(a));
    }
    for (int c : g.children) used[c] = true;
    plan.push_back(g);
  }
  return plan;
}

}  // namespace poincare
