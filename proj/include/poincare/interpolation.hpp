#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <concepts>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "poincare/geometry.hpp"
#include "poincare/mesh.hpp"
#include "poincare/quadrature.hpp"
#include "poincare/scalar_bounds.hpp"
#include "poincare/vector_bounds.hpp"

namespace poincare {

template <class F>
concept ScalarSampler = std::invocable<const F&, const Vec3&> &&
                        std::convertible_to<std::invoke_result_t<const F&, const Vec3&>, double>;

template <class F>
concept VectorSampler = std::invocable<const F&, const Vec3&> &&
                        std::convertible_to<std::invoke_result_t<const F&, const Vec3&>, Vec3>;

using ScalarFn = std::function<double(const Vec3&)>;
using VectorFn = std::function<Vec3(const Vec3&)>;
using MatrixFn = std::function<Eigen::Matrix3d(const Vec3&)>;

/// Piecewise-constant interpolant.  `values[k]` is the constant on region k;
/// `regions[k]` lists the cells (macrocell children or mesh cells) of region
/// k.  `residuals` are the defining mean conditions evaluated after
/// construction.
struct PiecewiseConstant {
  int components = 1;
  std::vector<Eigen::VectorXd> values;
  std::vector<std::vector<int>> regions;
  double bound = 0.0;
  std::string bound_formula;
  std::optional<double> trace_bound;
  std::vector<double> residuals;

  double max_residual() const {
    double r = 0.0;
    for (double x : residuals) r = std::max(r, std::abs(x));
    return r;
  }
};

struct InterpOptions {
  QuadratureOptions quadrature;
  CpChoice cp;
  /// C_Γ^Tr for the trace-bound form of the face-mean operator.
  std::optional<double> trace_constant;
  /// Use the d/λ₁ form for vector constants in 2D.
  bool general_vector = false;
  /// Overrides the attached constant (e.g. a known sharp value).
  std::optional<double> bound_override;
};

// ---- integration ---------------------------------------------------------

inline int volume_degree(const Cell& cell, const QuadratureOptions& q) {
  return cell.dim() == 2 ? q.triangle_degree : q.tetrahedron_degree;
}

/// ∫_Ω f over the cell's simplex decomposition.
template <class F>
auto cell_integral(const Cell& cell, F&& f, const QuadratureOptions& q = {}) {
  const auto simplices = simplex_decomposition(cell);
  using R = decltype(f(Vec3()));
  R acc = integrate(simplices.front(), f, volume_degree(cell, q));
  for (std::size_t i = 1; i < simplices.size(); ++i) acc += integrate(simplices[i], f, volume_degree(cell, q));
  return acc;
}

/// ∫_Γ f(x, n(x)) dΓ with the pointwise outward normal of each sub-facet.
template <class F>
auto face_integral(const Cell& cell, int face, F&& f, const QuadratureOptions& q = {}) {
  cell.face(face);
  using R = decltype(f(Vec3(), Vec3()));
  std::optional<R> acc;
  for (const auto& bf : cell.boundary_facets()) {
    if (bf.face != face) continue;
    Vec3 n;
    if (bf.points.size() == 2) {
      const Vec3 t = bf.points[1] - bf.points[0];
      n = Vec3(t.y(), -t.x(), 0.0).normalized();
    } else {
      n = (bf.points[1] - bf.points[0]).cross(bf.points[2] - bf.points[0]).normalized();
    }
    const int degree = bf.points.size() == 2 ? q.segment_degree : q.triangle_degree;
    R part = integrate(bf.points, [&](const Vec3& x) { return f(x, n); }, degree);
    if (acc) *acc += part;
    else acc = part;
  }
  if (!acc) throw Error(ErrorKind::DegenerateGeometry, "face has no boundary facets");
  return *acc;
}

template <ScalarSampler F>
double mean_over_cell(const Cell& cell, const F& w, const QuadratureOptions& q = {}) {
  return cell_integral(cell, [&](const Vec3& x) { return static_cast<double>(w(x)); }, q) / cell.measure();
}

template <ScalarSampler F>
double mean_over_faces(const Cell& cell, const std::vector<int>& faces, const F& w, const QuadratureOptions& q = {}) {
  double integral = 0.0, m = 0.0;
  for (int f : faces) {
    integral += face_integral(cell, f, [&](const Vec3& x, const Vec3&) { return static_cast<double>(w(x)); }, q);
    m += measure(cell, f);
  }
  return integral / m;
}

/// (1/|Γ|) ∫_Γ v·n dΓ with the pointwise normal.
template <VectorSampler F>
double mean_normal_flux(const Cell& cell, int face, const F& v, const QuadratureOptions& q = {}) {
  return face_integral(cell, face, [&](const Vec3& x, const Vec3& n) { return Vec3(v(x)).dot(n); }, q) /
         measure(cell, face);
}

// ---- error norms -----------------------------------------------------------

template <ScalarSampler F>
double l2_error(const Cell& cell, const F& w, double c, const QuadratureOptions& q = {}) {
  return std::sqrt(std::max(0.0, cell_integral(cell, [&](const Vec3& x) {
                              const double e = w(x) - c;
                              return e * e;
                            }, q)));
}

template <VectorSampler F>
double l2_error(const Cell& cell, const F& v, const Vec3& c, const QuadratureOptions& q = {}) {
  return std::sqrt(std::max(0.0, cell_integral(cell, [&](const Vec3& x) { return (Vec3(v(x)) - c).squaredNorm(); }, q)));
}

/// ‖∇w‖ from an analytic gradient.
inline double gradient_norm(const Cell& cell, const VectorFn& grad, const QuadratureOptions& q = {}) {
  return std::sqrt(cell_integral(cell, [&](const Vec3& x) { return grad(x).head(cell.dim()).squaredNorm(); }, q));
}

/// ‖∇v‖ (Frobenius) from an analytic Jacobian J(i, j) = ∂v_i/∂x_j.
inline double jacobian_norm(const Cell& cell, const MatrixFn& jac, const QuadratureOptions& q = {}) {
  const int d = cell.dim();
  return std::sqrt(cell_integral(cell, [&](const Vec3& x) { return jac(x).topLeftCorner(d, d).squaredNorm(); }, q));
}

inline Vec3 as_vec3(const Eigen::VectorXd& v) {
  Vec3 out = Vec3::Zero();
  for (int i = 0; i < v.size() && i < 3; ++i) out[i] = v[i];
  return out;
}

// ---- single-cell operators ----------------------------------------------------

/// I_Ω w = ⟨w⟩_Ω with the C_P upper bound attached.
template <ScalarSampler F>
PiecewiseConstant interp_mean_domain(const F& w, const Cell& cell, const InterpOptions& opt = {}) {
  PiecewiseConstant pc;
  const double value = mean_over_cell(cell, w, opt.quadrature);
  pc.values = {Eigen::VectorXd::Constant(1, value)};
  pc.regions = {{0}};
  if (opt.bound_override) {
    pc.bound = *opt.bound_override;
    pc.bound_formula = "user";
  } else {
    const ConstantBound cp = opt.cp.mode == CpMode::User ? cp_upper(cell, opt.cp) : best_cp_upper(cell);
    pc.bound = cp.value;
    pc.bound_formula = cp.formula;
  }
  pc.residuals = {mean_over_cell(cell, [&](const Vec3& x) { return w(x) - value; }, opt.quadrature)};
  return pc;
}

/// I_Γ w = ⟨w⟩_Γ with the C_Γ upper bound attached (and C_Γ^Tr if given).
template <ScalarSampler F>
PiecewiseConstant interp_mean_face(const F& w, const Cell& cell, const std::vector<int>& gamma,
                                   const InterpOptions& opt = {}) {
  if (gamma.empty()) throw Error(ErrorKind::InvalidFaceSelection, "empty face selection");
  PiecewiseConstant pc;
  const double value = mean_over_faces(cell, gamma, w, opt.quadrature);
  pc.values = {Eigen::VectorXd::Constant(1, value)};
  pc.regions = {{0}};
  if (opt.bound_override) {
    pc.bound = *opt.bound_override;
    pc.bound_formula = "user";
  } else {
    const ConstantBound b = best_c_gamma_upper(cell, gamma, opt.cp);
    pc.bound = b.value;
    pc.bound_formula = b.formula;
  }
  pc.trace_bound = opt.trace_constant;
  pc.residuals = {mean_over_faces(cell, gamma, [&](const Vec3& x) { return w(x) - value; }, opt.quadrature)};
  return pc;
}

/// ‖w − ⟨w⟩_Γ‖_Γ, the left side of the trace-bound form.
template <ScalarSampler F>
double trace_error(const Cell& cell, const std::vector<int>& gamma, const F& w, double value,
                   const QuadratureOptions& q = {}) {
  double s = 0.0;
  for (int f : gamma) {
    s += face_integral(cell, f, [&](const Vec3& x, const Vec3&) {
      const double e = w(x) - value;
      return e * e;
    }, q);
  }
  return std::sqrt(s);
}

/// Solves N̂ c = r, r_i = (1/|Γᵢ|)∫ v·n dΓ over d faces, N̂ built from the
/// (mean) normals.  Residuals are the recomputed flux means of v − c.
template <VectorSampler F>
PiecewiseConstant interp_vector_cell(const F& v, const Cell& cell, const std::vector<int>& faces,
                                     const InterpOptions& opt = {}) {
  const NormalSystem ns = normal_system(cell, faces);
  const int d = cell.dim();
  Eigen::VectorXd r(d);
  for (int i = 0; i < d; ++i) r[i] = mean_normal_flux(cell, faces[i], v, opt.quadrature) / ns.scales[i];
  const Eigen::VectorXd c = ns.normals.partialPivLu().solve(r);
  if (!c.allFinite()) throw Error(ErrorKind::DependentNormals, "singular normal system");
  PiecewiseConstant pc;
  pc.components = d;
  pc.values = {c};
  pc.regions = {{0}};
  const Vec3 c3 = as_vec3(c);
  for (int i = 0; i < d; ++i) {
    pc.residuals.push_back(mean_normal_flux(cell, faces[i], [&](const Vec3& x) { return Vec3(v(x)) - c3; },
                                            opt.quadrature));
  }
  if (opt.bound_override) {
    pc.bound = *opt.bound_override;
    pc.bound_formula = "user";
  } else {
    const VectorConstant vc = vector_constant_for_cell(cell, faces, opt.cp, opt.general_vector);
    pc.bound = vc.value;
    pc.bound_formula = vc.formula;
  }
  return pc;
}

// ---- macrocells ----------------------------------------------------------------

/// First macro-boundary face of each child (the default per-child Γᵢ).
inline std::vector<int> default_child_faces(const Cell& macro) {
  std::vector<int> out(macro.children().size(), -1);
  for (int i = 0; i < macro.face_count(); ++i) {
    const auto [c, f] = macro.face_owner(i);
    if (out[c] < 0) out[c] = f;
  }
  return out;
}

/// Per-child constants ⟨w⟩_{Γᵢ}, Γᵢ a face of child i; bound max_i C_{Γᵢ}(ωᵢ).
template <ScalarSampler F>
PiecewiseConstant interp_macrocell_scalar(const F& w, const Cell& macro, std::vector<int> child_faces = {},
                                          const InterpOptions& opt = {}) {
  if (macro.kind() != CellKind::Macrocell) throw Error(ErrorKind::Precondition, "expected a macrocell");
  const int n = static_cast<int>(macro.children().size());
  if (child_faces.empty()) child_faces = default_child_faces(macro);
  if (static_cast<int>(child_faces.size()) != n) {
    throw Error(ErrorKind::InvalidFaceSelection, "need one face per child");
  }
  PiecewiseConstant pc;
  std::vector<ConstantBound> bounds;
  for (int i = 0; i < n; ++i) {
    const Cell& ch = macro.children()[i];
    if (child_faces[i] < 0 || child_faces[i] >= ch.face_count()) {
      throw Error(ErrorKind::InvalidFaceSelection, "child " + std::to_string(i) + " has no selected face");
    }
    const double value = mean_over_faces(ch, {child_faces[i]}, w, opt.quadrature);
    pc.values.push_back(Eigen::VectorXd::Constant(1, value));
    pc.regions.push_back({i});
    pc.residuals.push_back(
        mean_over_faces(ch, {child_faces[i]}, [&](const Vec3& x) { return w(x) - value; }, opt.quadrature));
    if (!opt.bound_override) bounds.push_back(best_c_gamma_upper(ch, {child_faces[i]}, opt.cp));
  }
  if (opt.bound_override) {
    pc.bound = *opt.bound_override;
    pc.bound_formula = "user";
  } else {
    const ConstantBound b = macrocell_scalar_constant(bounds);
    pc.bound = b.value;
    pc.bound_formula = b.formula;
  }
  return pc;
}

/// One constant vector per plan group, fixed by the mean normal fluxes on the
/// group's two faces; bound max over groups.
template <VectorSampler F>
PiecewiseConstant interp_macrocell_vector(const F& v, const Cell& macro, std::vector<PairGroup> plan = {},
                                          const InterpOptions& opt = {}) {
  if (macro.kind() != CellKind::Macrocell || macro.dim() != 2) {
    throw Error(ErrorKind::Precondition, "vector macrocell interpolation needs a 2D macrocell");
  }
  if (plan.empty()) plan = greedy_pair_plan(macro);
  validate_pair_plan(plan, static_cast<int>(macro.children().size()));
  PiecewiseConstant pc;
  pc.components = 2;
  std::vector<PairConstant> constants;
  for (const auto& g : plan) {
    Eigen::Matrix2d nm;
    Eigen::Vector2d r;
    for (int k = 0; k < 2; ++k) {
      const auto [c, f] = g.faces[k];
      const Cell& ch = macro.children()[c];
      const Vec3 n = mean_normal(ch, f);
      const double len = n.norm();
      nm.row(k) << n.x() / len, n.y() / len;
      r[k] = mean_normal_flux(ch, f, v, opt.quadrature) / len;
    }
    if (std::abs(nm.determinant()) <= kDetTolerance) {
      throw Error(ErrorKind::DependentNormals, "pair normals are parallel");
    }
    const Eigen::Vector2d c = nm.partialPivLu().solve(r);
    pc.values.push_back(c);
    pc.regions.push_back(g.children);
    const Vec3 c3(c[0], c[1], 0.0);
    for (const auto& [ci, f] : g.faces) {
      pc.residuals.push_back(mean_normal_flux(macro.children()[ci], f, [&](const Vec3& x) { return Vec3(v(x)) - c3; },
                                              opt.quadrature));
    }
    if (!opt.bound_override) constants.push_back(pair_vector_constant(macro, g, opt.cp));
  }
  if (opt.bound_override) {
    pc.bound = *opt.bound_override;
    pc.bound_formula = "user";
  } else {
    const VectorConstant vc = macrocell_vector_constant(constants, static_cast<int>(macro.children().size()));
    pc.bound = vc.value;
    pc.bound_formula = vc.formula;
  }
  return pc;
}

// ---- meshes --------------------------------------------------------------------

/// Per-cell face choice for the scalar mesh operator.  Empty `faces` means the
/// smallest face index of every cell; `all_faces` averages over ∂Ωᵢ.
struct MeshScalarPlan {
  bool all_faces = false;
  std::vector<int> faces;
};

template <ScalarSampler F>
PiecewiseConstant interp_mesh_scalar(const F& w, const Mesh& mesh, const MeshScalarPlan& plan = {},
                                     const InterpOptions& opt = {}) {
  const int n = static_cast<int>(mesh.size());
  if (!plan.all_faces && !plan.faces.empty() && static_cast<int>(plan.faces.size()) != n) {
    throw Error(ErrorKind::InvalidPlan, "plan lists " + std::to_string(plan.faces.size()) + " faces for " +
                                            std::to_string(n) + " cells");
  }
  PiecewiseConstant pc;
  pc.values.resize(n);
  pc.regions.resize(n);
  pc.residuals.resize(n);
  std::vector<ConstantBound> bounds(n);
  for (int i = 0; i < n; ++i) {
    const Cell& cell = mesh.cells()[i];
    std::vector<int> gamma;
    if (plan.all_faces) {
      for (int f = 0; f < cell.face_count(); ++f) gamma.push_back(f);
    } else {
      const int f = plan.faces.empty() ? 0 : plan.faces[i];
      if (f < 0 || f >= cell.face_count()) {
        throw Error(ErrorKind::InvalidPlan, "cell " + std::to_string(i) + " has no face " + std::to_string(f));
      }
      gamma = {f};
    }
    const double value = mean_over_faces(cell, gamma, w, opt.quadrature);
    pc.values[i] = Eigen::VectorXd::Constant(1, value);
    pc.regions[i] = {i};
    pc.residuals[i] = mean_over_faces(cell, gamma, [&](const Vec3& x) { return w(x) - value; }, opt.quadrature);
    if (!opt.bound_override) bounds[i] = best_c_gamma_upper(cell, gamma, opt.cp);
  }
  if (opt.bound_override) {
    pc.bound = *opt.bound_override;
    pc.bound_formula = "user";
  } else {
    const ConstantBound b = macrocell_scalar_constant(bounds);
    pc.bound = b.value;
    pc.bound_formula = "mesh-max[" + b.formula + "]";
  }
  return pc;
}

/// Lexicographically smallest set of d faces with independent normals.
inline std::vector<int> default_vector_faces(const Cell& cell) {
  const int nf = cell.face_count();
  const int d = cell.dim();
  auto ok = [&](const std::vector<int>& fs) {
    try {
      normal_system(cell, fs);
      return true;
    } catch (const Error&) {
      return false;
    }
  };
  if (d == 2) {
    for (int a = 0; a < nf; ++a) {
      for (int b = a + 1; b < nf; ++b) {
        if (ok({a, b})) return {a, b};
      }
    }
  } else {
    for (int a = 0; a < nf; ++a) {
      for (int b = a + 1; b < nf; ++b) {
        for (int c = b + 1; c < nf; ++c) {
          if (ok({a, b, c})) return {a, b, c};
        }
      }
    }
  }
  throw Error(ErrorKind::DependentNormals, "cell lacks d faces with independent normals");
}

/// Per-cell vector constants preserving ⟨v·n⟩ on the faces of each cell's
/// system; bound max over cells.  `faces_per_cell` empty means the default
/// choice for every cell.
template <VectorSampler F>
PiecewiseConstant interp_mesh_vector(const F& v, const Mesh& mesh, std::vector<std::vector<int>> faces_per_cell = {},
                                     const InterpOptions& opt = {}) {
  const int n = static_cast<int>(mesh.size());
  if (faces_per_cell.empty()) {
    for (const auto& c : mesh.cells()) faces_per_cell.push_back(default_vector_faces(c));
  }
  if (static_cast<int>(faces_per_cell.size()) != n) throw Error(ErrorKind::InvalidPlan, "plan/mesh size mismatch");
  PiecewiseConstant pc;
  pc.components = mesh.dim();
  double bound = 0.0;
  std::string formula;
  for (int i = 0; i < n; ++i) {
    InterpOptions local = opt;
    const PiecewiseConstant cell_pc = interp_vector_cell(v, mesh.cells()[i], faces_per_cell[i], local);
    pc.values.push_back(cell_pc.values[0]);
    pc.regions.push_back({i});
    pc.residuals.insert(pc.residuals.end(), cell_pc.residuals.begin(), cell_pc.residuals.end());
    if (cell_pc.bound > bound) {
      bound = cell_pc.bound;
      formula = cell_pc.bound_formula;
    }
  }
  pc.bound = bound;
  pc.bound_formula = opt.bound_override ? "user" : "mesh-max[" + formula + "]";
  return pc;
}

// ---- global errors -------------------------------------------------------------

/// ‖w − Iw‖ over the given cells, region k of `pc` living on cells regions[k].
template <ScalarSampler F>
double interpolation_error(const std::vector<const Cell*>& cells, const PiecewiseConstant& pc, const F& w,
                           const QuadratureOptions& q = {}) {
  double s = 0.0;
  for (std::size_t k = 0; k < pc.values.size(); ++k) {
    for (int c : pc.regions[k]) {
      const double e = l2_error(*cells.at(c), w, pc.values[k][0], q);
      s += e * e;
    }
  }
  return std::sqrt(s);
}

template <VectorSampler F>
double interpolation_error_vector(const std::vector<const Cell*>& cells, const PiecewiseConstant& pc, const F& v,
                                  const QuadratureOptions& q = {}) {
  double s = 0.0;
  for (std::size_t k = 0; k < pc.values.size(); ++k) {
    for (int c : pc.regions[k]) {
      const double e = l2_error(*cells.at(c), v, as_vec3(pc.values[k]), q);
      s += e * e;
    }
  }
  return std::sqrt(s);
}

inline std::vector<const Cell*> cell_pointers(const Cell& cell) {
  if (cell.kind() != CellKind::Macrocell) return {&cell};
  std::vector<const Cell*> out;
  for (const auto& c : cell.children()) out.push_back(&c);
  return out;
}

inline std::vector<const Cell*> cell_pointers(const Mesh& mesh) {
  std::vector<const Cell*> out;
  for (const auto& c : mesh.cells()) out.push_back(&c);
  return out;
}

}  // namespace poincare
