#pragma once

#include <cmath>

namespace curvesolve {

// First-order forward-mode scalar: value + one tangent component.
// Used to differentiate the discrete residual exactly, column by column.
struct Dual {
  double v = 0.0;
  double d = 0.0;

  Dual() = default;
  Dual(double value) : v(value), d(0.0) {}
  Dual(double value, double deriv) : v(value), d(deriv) {}

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v *= o.v; return *this; }
  Dual& operator/=(const Dual& o) { d = (d * o.v - v * o.d) / (o.v * o.v); v /= o.v; return *this; }
};

inline Dual operator+(Dual a, const Dual& b) { a += b; return a; }
inline Dual operator-(Dual a, const Dual& b) { a -= b; return a; }
inline Dual operator*(Dual a, const Dual& b) { a *= b; return a; }
inline Dual operator/(Dual a, const Dual& b) { a /= b; return a; }
inline Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
inline Dual operator+(const Dual& a) { return a; }

inline bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
inline bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
inline bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
inline bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }
inline bool operator==(const Dual& a, const Dual& b) { return a.v == b.v; }
inline bool operator!=(const Dual& a, const Dual& b) { return a.v != b.v; }

inline Dual sin(const Dual& x) { return {std::sin(x.v), std::cos(x.v) * x.d}; }
inline Dual cos(const Dual& x) { return {std::cos(x.v), -std::sin(x.v) * x.d}; }
inline Dual tan(const Dual& x) {
  const double t = std::tan(x.v);
  return {t, (1.0 + t * t) * x.d};
}
inline Dual exp(const Dual& x) {
  const double e = std::exp(x.v);
  return {e, e * x.d};
}
inline Dual log(const Dual& x) { return {std::log(x.v), x.d / x.v}; }
inline Dual sqrt(const Dual& x) {
  const double s = std::sqrt(x.v);
  return {s, x.d / (2.0 * s)};
}
inline Dual sinh(const Dual& x) { return {std::sinh(x.v), std::cosh(x.v) * x.d}; }
inline Dual cosh(const Dual& x) { return {std::cosh(x.v), std::sinh(x.v) * x.d}; }
inline Dual tanh(const Dual& x) {
  const double t = std::tanh(x.v);
  return {t, (1.0 - t * t) * x.d};
}
inline Dual atan(const Dual& x) { return {std::atan(x.v), x.d / (1.0 + x.v * x.v)}; }
inline Dual asin(const Dual& x) { return {std::asin(x.v), x.d / std::sqrt(1.0 - x.v * x.v)}; }
inline Dual acos(const Dual& x) { return {std::acos(x.v), -x.d / std::sqrt(1.0 - x.v * x.v)}; }
inline Dual abs(const Dual& x) { return x.v < 0.0 ? -x : x; }
inline Dual pow(const Dual& x, double p) {
  return {std::pow(x.v, p), p * std::pow(x.v, p - 1.0) * x.d};
}
inline Dual pow(const Dual& x, const Dual& p) {
  if (p.d == 0.0) return pow(x, p.v);
  return exp(p * log(x));
}
inline Dual pow(double x, const Dual& p) { return pow(Dual(x), p); }

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }
inline double deriv_of(double) { return 0.0; }
inline double deriv_of(const Dual& x) { return x.d; }

} // namespace curvesolve
