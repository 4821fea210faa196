#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "poincare/geometry.hpp"

namespace poincare {

/// Nodes in reference coordinates with positive weights summing to the
/// reference measure: [0,1] (1), the unit triangle (1/2), the unit
/// tetrahedron (1/6).  Exact for polynomials up to `degree`.
struct QuadratureRule {
  int dim = 1;
  int degree = 0;
  std::vector<Vec3> points;
  std::vector<double> weights;
};

namespace detail {

inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      const double dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) {
        p0 = 1.0;
        p1 = 0.0;
        for (int k = 1; k <= n; ++k) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
        }
        const double dpf = n * (z * p0 - p1) / (z * z - 1.0);
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dpf * dpf);
        break;
      }
    }
  }
}

}  // namespace detail

/// n-point Gauss–Legendre rule on [0, 1]; exact to degree 2n − 1.
inline QuadratureRule gauss_segment(int npts) {
  QuadratureRule r;
  r.dim = 1;
  r.degree = 2 * npts - 1;
  std::vector<double> x, w;
  detail::gauss_legendre(npts, x, w);
  for (int i = 0; i < npts; ++i) {
    r.points.push_back(Vec3(x[i], 0, 0));
    r.weights.push_back(w[i]);
  }
  return r;
}

/// Symmetric 12-point degree-6 rule on the unit triangle.
inline QuadratureRule dunavant_degree6() {
  QuadratureRule r;
  r.dim = 2;
  r.degree = 6;
  auto orbit3 = [&](double a, double w) {
    const double b = 1.0 - 2.0 * a;
    for (auto l : {Vec3(a, a, b), Vec3(a, b, a), Vec3(b, a, a)}) {
      r.points.push_back(Vec3(l[1], l[2], 0));
      r.weights.push_back(0.5 * w);
    }
  };
  auto orbit6 = [&](double a, double b, double w) {
    const double c = 1.0 - a - b;
    for (auto l : {Vec3(a, b, c), Vec3(a, c, b), Vec3(b, a, c), Vec3(b, c, a), Vec3(c, a, b), Vec3(c, b, a)}) {
      r.points.push_back(Vec3(l[1], l[2], 0));
      r.weights.push_back(0.5 * w);
    }
  };
  orbit3(0.249286745170910, 0.116786275726379);
  orbit3(0.063089014491502, 0.050844906370207);
  orbit6(0.053145049844817, 0.310352451033784, 0.082851075618374);
  return r;
}

/// Collapsed-coordinate (conical product) rule on the unit triangle.
inline QuadratureRule triangle_conical(int degree) {
  const int n = std::max(1, (degree + 3) / 2);
  std::vector<double> x, w;
  detail::gauss_legendre(n, x, w);
  QuadratureRule r;
  r.dim = 2;
  r.degree = 2 * n - 2;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double u = x[i], v = x[j];
      r.points.push_back(Vec3(u, v * (1.0 - u), 0));
      r.weights.push_back(w[i] * w[j] * (1.0 - u));
    }
  }
  return r;
}

/// Collapsed-coordinate rule on the unit tetrahedron.
inline QuadratureRule tetrahedron_conical(int degree) {
  const int n = std::max(1, (degree + 4) / 2);
  std::vector<double> x, w;
  detail::gauss_legendre(n, x, w);
  QuadratureRule r;
  r.dim = 3;
  r.degree = 2 * n - 3;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const double u = x[i], v = x[j], t = x[k];
        r.points.push_back(Vec3(u, v * (1.0 - u), t * (1.0 - u) * (1.0 - v)));
        r.weights.push_back(w[i] * w[j] * w[k] * (1.0 - u) * (1.0 - u) * (1.0 - v));
      }
    }
  }
  return r;
}

/// Integration degrees used by the interpolation module.
struct QuadratureOptions {
  int segment_degree = 7;
  int triangle_degree = 6;
  int tetrahedron_degree = 6;
};

inline const QuadratureRule& cached_rule(int simplex_points, int degree) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, QuadratureRule> cache;
  std::lock_guard lock(mutex);
  auto key = std::make_pair(simplex_points, degree);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  QuadratureRule r;
  if (simplex_points == 2) r = gauss_segment(std::max(1, (degree + 2) / 2));
  else if (simplex_points == 3) r = degree == 6 ? dunavant_degree6() : triangle_conical(degree);
  else r = tetrahedron_conical(degree);
  return cache.emplace(key, std::move(r)).first->second;
}

/// Measure of a segment, a triangle (in 2D or 3D) or a tetrahedron.
inline double simplex_volume(const Simplex& s) {
  if (s.size() == 2) return (s[1] - s[0]).norm();
  if (s.size() == 3) return 0.5 * (s[1] - s[0]).cross(s[2] - s[0]).norm();
  return detail::simplex_measure(s);
}

/// ∫_s f using a rule exact to `degree` on the simplex (segment, triangle, tetrahedron).
template <class F>
auto integrate(const Simplex& s, F&& f, int degree) {
  const QuadratureRule& rule = cached_rule(static_cast<int>(s.size()), degree);
  const double ref_measure = s.size() == 2 ? 1.0 : s.size() == 3 ? 0.5 : 1.0 / 6.0;
  const double jac = simplex_volume(s) / ref_measure;
  using R = decltype(f(s[0]));
  R acc = f(s[0]) * 0.0;
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    Vec3 x = s[0];
    for (std::size_t k = 1; k < s.size(); ++k) x += rule.points[q][k - 1] * (s[k] - s[0]);
    acc += rule.weights[q] * f(x);
  }
  return acc * jac;
}

}  // namespace poincare
