#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "pinnode/tape.hpp"

namespace pinnode {

/// Truncated second-order Taylor coefficients of a quantity with respect to
/// the scalar network input t: (u, du/dt, d2u/dt2). S is double for plain
/// evaluation or Var when the three coefficients must be differentiable
/// with respect to network parameters.
template <class S>
struct Taylor2 {
  S value{};
  S d1{};
  S d2{};
};

/// (t, 1, 0): the independent variable.
inline Taylor2<double> seed_input(double t) { return {t, 1.0, 0.0}; }

template <class S>
Taylor2<S> constant_taylor(const S& c) {
  return {c, S(0.0), S(0.0)};
}

template <class S>
Taylor2<S> operator+(const Taylor2<S>& a, const Taylor2<S>& b) {
  return {a.value + b.value, a.d1 + b.d1, a.d2 + b.d2};
}

template <class S>
Taylor2<S> operator-(const Taylor2<S>& a, const Taylor2<S>& b) {
  return {a.value - b.value, a.d1 - b.d1, a.d2 - b.d2};
}

/// Leibniz rule truncated at second order.
template <class S>
Taylor2<S> operator*(const Taylor2<S>& a, const Taylor2<S>& b) {
  return {a.value * b.value, a.d1 * b.value + a.value * b.d1,
          a.d2 * b.value + 2.0 * (a.d1 * b.d1) + a.value * b.d2};
}

template <class S>
Taylor2<S> scale(const S& c, const Taylor2<S>& a) {
  return {c * a.value, c * a.d1, c * a.d2};
}

/// c * a + shift, where c and shift carry no t-dependence.
template <class S>
Taylor2<S> affine(const S& c, const Taylor2<S>& a, const S& shift) {
  return {c * a.value + shift, c * a.d1, c * a.d2};
}

enum class Primitive { identity, sigmoid, tanh, sin, cos, relu, swish, exp, softplus };

/// Parses "tanh", "sine"/"sin", "relu", ...; throws ConfigError otherwise.
Primitive parse_primitive(std::string_view name);
std::string to_string(Primitive p);

/// f and its first three derivatives at x; the batched kernel needs f'''
/// to back-propagate through the d2 channel.
struct Jet3 {
  double f, f1, f2, f3;
};
inline Jet3 primitive_jet(Primitive p, double x);

/// (f, f', f'') evaluated in S so that, for S = Var, the derivatives stay
/// differentiable with respect to whatever x depends on.
template <class S>
std::array<S, 3> primitive_derivatives(Primitive p, const S& x) {
  using std::cos;
  using std::exp;
  using std::sin;
  using std::tanh;
  switch (p) {
    case Primitive::identity:
      return {x, S(1.0), S(0.0)};
    case Primitive::sin: {
      S s = sin(x);
      return {s, cos(x), -s};
    }
    case Primitive::cos: {
      S c = cos(x);
      return {c, -sin(x), -c};
    }
    case Primitive::tanh: {
      S y = tanh(x);
      S d = 1.0 - y * y;
      return {y, d, -2.0 * (y * d)};
    }
    case Primitive::sigmoid: {
      S s = sigmoid(x);
      S d = s * (1.0 - s);
      return {s, d, d * (1.0 - 2.0 * s)};
    }
    case Primitive::relu: {
      // relu'(0) = 0 and relu'' = 0 everywhere.
      const double step = value_of(x) > 0.0 ? 1.0 : 0.0;
      return {x * step, S(step), S(0.0)};
    }
    case Primitive::swish: {
      S s = sigmoid(x);
      S d = s * (1.0 - s);
      return {x * s, s + x * d, 2.0 * d + x * (d * (1.0 - 2.0 * s))};
    }
    case Primitive::exp: {
      S e = exp(x);
      return {e, e, e};
    }
    case Primitive::softplus: {
      S s = sigmoid(x);
      return {softplus(x), s, s * (1.0 - s)};
    }
  }
  return {x, S(1.0), S(0.0)};
}

/// Second-order chain rule: (f(v), f'(v) d1, f''(v) d1^2 + f'(v) d2).
template <class S>
Taylor2<S> taylor_apply(Primitive p, const Taylor2<S>& x) {
  const auto [f, f1, f2] = primitive_derivatives(p, x.value);
  return {f, f1 * x.d1, f2 * (x.d1 * x.d1) + f1 * x.d2};
}

inline Jet3 primitive_jet(Primitive p, double x) {
  switch (p) {
    case Primitive::identity:
      return {x, 1.0, 0.0, 0.0};
    case Primitive::sin: {
      const double s = std::sin(x), c = std::cos(x);
      return {s, c, -s, -c};
    }
    case Primitive::cos: {
      const double s = std::sin(x), c = std::cos(x);
      return {c, -s, -c, s};
    }
    case Primitive::tanh: {
      const double y = std::tanh(x);
      const double d = 1.0 - y * y;
      return {y, d, -2.0 * y * d, d * (4.0 * y * y - 2.0 * d)};
    }
    case Primitive::sigmoid: {
      const double s = sigmoid(x);
      const double d = s * (1.0 - s);
      const double q = 1.0 - 2.0 * s;
      return {s, d, d * q, d * q * q - 2.0 * d * d};
    }
    case Primitive::relu:
      return x > 0.0 ? Jet3{x, 1.0, 0.0, 0.0} : Jet3{0.0, 0.0, 0.0, 0.0};
    case Primitive::swish: {
      const double s = sigmoid(x);
      const double d = s * (1.0 - s);
      const double q = 1.0 - 2.0 * s;
      const double s2 = d * q;
      const double s3 = d * q * q - 2.0 * d * d;
      return {x * s, s + x * d, 2.0 * d + x * s2, 3.0 * s2 + x * s3};
    }
    case Primitive::exp: {
      const double e = std::exp(x);
      return {e, e, e, e};
    }
    case Primitive::softplus: {
      const double s = sigmoid(x);
      const double d = s * (1.0 - s);
      return {softplus(x), s, d, d * (1.0 - 2.0 * s)};
    }
  }
  return {x, 1.0, 0.0, 0.0};
}

}  // namespace pinnode
