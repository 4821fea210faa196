#pragma once

#include <Eigen/Dense>

#include <array>
#include <cctype>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "poincare/error.hpp"
#include "poincare/geometry.hpp"

namespace poincare {

/// Analytic scalar test field with its gradient.
struct ScalarField {
  std::string id;
  std::function<double(const Vec3&)> value;
  std::function<Vec3(const Vec3&)> gradient;
  /// Polynomial degree, or -1 for trigonometric fields.
  int degree = 0;
};

/// Analytic vector test field with its Jacobian J(i, j) = ∂v_i/∂x_j.
struct VectorField {
  std::string id;
  std::function<Vec3(const Vec3&)> value;
  std::function<Eigen::Matrix3d(const Vec3&)> jacobian;
  int components = 2;
  int degree = 0;
};

namespace detail {

struct TrigFactor {
  bool is_sin = true;
  double freq = 1.0;  // multiple of π
  int axis = 0;
};

struct Term {
  double coef = 1.0;
  std::array<int, 3> power{0, 0, 0};
  std::vector<TrigFactor> trig;

  double eval(const Vec3& x) const {
    double v = coef;
    for (int i = 0; i < 3; ++i) v *= std::pow(x[i], power[i]);
    for (const auto& t : trig) {
      const double a = std::numbers::pi * t.freq * x[t.axis];
      v *= t.is_sin ? std::sin(a) : std::cos(a);
    }
    return v;
  }

  double derivative(const Vec3& x, int j) const {
    // Product rule over the coordinate monomial and each trigonometric factor.
    double total = 0.0;
    if (power[j] > 0) {
      Term t = *this;
      t.coef *= power[j];
      t.power[j] -= 1;
      total += t.eval(x);
    }
    for (std::size_t k = 0; k < trig.size(); ++k) {
      if (trig[k].axis != j) continue;
      Term t = *this;
      const double a = std::numbers::pi * trig[k].freq;
      t.coef *= trig[k].is_sin ? a : -a;
      t.trig[k].is_sin = !trig[k].is_sin;
      total += t.eval(x);
    }
    return total;
  }

  int degree() const { return power[0] + power[1] + power[2]; }
};

class FieldParser {
 public:
  explicit FieldParser(std::string text) : s_(strip(std::move(text))) {}

  std::vector<Term> expression() {
    std::vector<Term> terms;
    double sign = 1.0;
    if (peek() == '-') {
      sign = -1.0;
      ++pos_;
    } else if (peek() == '+') {
      ++pos_;
    }
    for (;;) {
      Term t = term();
      t.coef *= sign;
      terms.push_back(t);
      if (peek() == '+') sign = 1.0;
      else if (peek() == '-') sign = -1.0;
      else break;
      ++pos_;
    }
    return terms;
  }

  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::UnknownField, "field '" + s_ + "': " + what + " at position " + std::to_string(pos_));
  }

 private:
  static std::string strip(std::string t) {
    std::string out;
    for (char c : t) {
      if (!std::isspace(static_cast<unsigned char>(c))) out += c;
    }
    return out;
  }

  bool starts_with(const char* p) const { return s_.compare(pos_, std::char_traits<char>::length(p), p) == 0; }

  double number() {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s_.substr(pos_), &used);
    } catch (const std::exception&) {
      fail("expected a number");
    }
    pos_ += used;
    return v;
  }

  static int axis_of(char c) { return c == 'x' ? 0 : c == 'y' ? 1 : c == 'z' ? 2 : -1; }

  void factor(Term& t) {
    const char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      t.coef *= number();
      return;
    }
    if (starts_with("sin(") || starts_with("cos(")) {
      TrigFactor f;
      f.is_sin = starts_with("sin(");
      pos_ += 4;
      if (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.') {
        f.freq = number();
        expect('*');
      }
      if (!starts_with("pi*")) fail("trigonometric argument must be [k*]pi*<x|y|z>");
      pos_ += 3;
      f.axis = axis_of(peek());
      if (f.axis < 0) fail("unknown coordinate");
      ++pos_;
      expect(')');
      t.trig.push_back(f);
      return;
    }
    const int axis = axis_of(c);
    if (axis < 0) fail("unknown factor");
    ++pos_;
    int k = 1;
    if (peek() == '^') {
      ++pos_;
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected an exponent");
      k = peek() - '0';
      ++pos_;
    }
    t.power[axis] += k;
  }

  Term term() {
    Term t;
    factor(t);
    while (peek() == '*') {
      ++pos_;
      factor(t);
    }
    if (t.degree() > 3) fail("monomials are limited to degree 3");
    return t;
  }

  std::string s_;
  std::size_t pos_ = 0;
};

inline ScalarField make_scalar(const std::string& id, std::vector<Term> terms) {
  ScalarField f;
  f.id = id;
  int degree = 0;
  bool trig = false;
  for (const auto& t : terms) {
    if (!t.trig.empty()) trig = true;
    degree = std::max(degree, t.degree());
  }
  f.degree = trig ? -1 : degree;
  f.value = [terms](const Vec3& x) {
    double s = 0.0;
    for (const auto& t : terms) s += t.eval(x);
    return s;
  };
  f.gradient = [terms](const Vec3& x) {
    Vec3 g = Vec3::Zero();
    for (const auto& t : terms) {
      for (int j = 0; j < 3; ++j) g[j] += t.derivative(x, j);
    }
    return g;
  };
  return f;
}

}  // namespace detail

/// Parses a scalar field identifier: a sum of products of numbers, x, y, z
/// (with ^k, total degree ≤ 3 per term), sin(k*pi*x) and cos(k*pi*x).
/// Examples: "1", "x", "x^2*y", "2*x - y + 0.5", "sin(pi*x)*cos(pi*y)".
inline ScalarField parse_scalar_field(const std::string& id) {
  detail::FieldParser p(id);
  auto terms = p.expression();
  if (!p.at_end()) p.fail("unexpected trailing characters");
  return detail::make_scalar(id, std::move(terms));
}

/// Parses "[f1, f2]" or "[f1, f2, f3]" with each component a scalar field.
inline VectorField parse_vector_field(const std::string& id) {
  detail::FieldParser p(id);
  p.expect('[');
  std::vector<std::vector<detail::Term>> comps;
  comps.push_back(p.expression());
  while (p.peek() == ',') {
    p.expect(',');
    comps.push_back(p.expression());
  }
  p.expect(']');
  if (!p.at_end()) p.fail("unexpected trailing characters");
  if (comps.size() != 2 && comps.size() != 3) p.fail("vector fields have 2 or 3 components");
  std::vector<ScalarField> cs;
  for (auto& c : comps) cs.push_back(detail::make_scalar(id, std::move(c)));
  VectorField f;
  f.id = id;
  f.components = static_cast<int>(cs.size());
  f.degree = 0;
  for (const auto& c : cs) f.degree = (c.degree < 0 || f.degree < 0) ? -1 : std::max(f.degree, c.degree);
  f.value = [cs](const Vec3& x) {
    Vec3 v = Vec3::Zero();
    for (std::size_t i = 0; i < cs.size(); ++i) v[i] = cs[i].value(x);
    return v;
  };
  f.jacobian = [cs](const Vec3& x) {
    Eigen::Matrix3d j = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < cs.size(); ++i) j.row(i) = cs[i].gradient(x).transpose();
    return j;
  };
  return f;
}

}  // namespace poincare
