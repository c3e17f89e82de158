#pragma once

#include <cmath>

namespace rba::ad {

/// Second-order truncated Taylor scalar: a value together with the first and
/// second derivatives along a single input direction. Arithmetic propagates
/// derivatives exactly: for h = f(g),
///   h.d1 = f'(g) g.d1,  h.d2 = f''(g) g.d1^2 + f'(g) g.d2.
struct Jet2 {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;

  /// Seed for the coordinate being differentiated: d1 = 1, d2 = 0.
  static Jet2 variable(double x) { return {x, 1.0, 0.0}; }
  static Jet2 constant(double c) { return {c, 0.0, 0.0}; }
};

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2};
}

inline Jet2 operator-(const Jet2& a, const Jet2& b) {
  return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2};
}

inline Jet2 operator-(const Jet2& a) { return {-a.v, -a.d1, -a.d2}; }

/// Leibniz rule up to second order.
inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  return {a.v * b.v,
          a.d1 * b.v + a.v * b.d1,
          a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
}

inline Jet2 operator*(double s, const Jet2& a) { return {s * a.v, s * a.d1, s * a.d2}; }
inline Jet2 operator*(const Jet2& a, double s) { return s * a; }
inline Jet2 operator+(const Jet2& a, double s) { return {a.v + s, a.d1, a.d2}; }
inline Jet2 operator+(double s, const Jet2& a) { return a + s; }
inline Jet2 operator-(const Jet2& a, double s) { return {a.v - s, a.d1, a.d2}; }
inline Jet2 operator-(double s, const Jet2& a) { return {s - a.v, -a.d1, -a.d2}; }

inline Jet2 tanh(const Jet2& x) {
  double t = std::tanh(x.v);
  double t1 = 1.0 - t * t;
  double t2 = -2.0 * t * t1;
  return {t, t1 * x.d1, t2 * x.d1 * x.d1 + t1 * x.d2};
}

inline Jet2 sin(const Jet2& x) {
  double s = std::sin(x.v);
  double c = std::cos(x.v);
  return {s, c * x.d1, -s * x.d1 * x.d1 + c * x.d2};
}

inline Jet2 cos(const Jet2& x) {
  double s = std::sin(x.v);
  double c = std::cos(x.v);
  return {c, -s * x.d1, -c * x.d1 * x.d1 - s * x.d2};
}

/// |x| with subgradient 0 at x = 0.
inline Jet2 abs(const Jet2& x) {
  if (x.v > 0.0) return x;
  if (x.v < 0.0) return -x;
  return {0.0, 0.0, 0.0};
}

}  // namespace rba::ad
