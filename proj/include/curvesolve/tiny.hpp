#pragma once

#include <array>

#include "curvesolve/errors.hpp"

namespace curvesolve {

// Fixed-capacity vector/matrix for the surface dimension n <= 2.
// Templated on the scalar so the same geometry code runs on double and Dual.

template <class T>
struct TinyVec {
  int n = 0;
  std::array<T, 2> a{};

  TinyVec() = default;
  explicit TinyVec(int dim) : n(dim) { a = {T(0), T(0)}; }
  T& operator[](int i) { return a[i]; }
  const T& operator[](int i) const { return a[i]; }
};

template <class T>
struct TinyMat {
  int n = 0;
  std::array<std::array<T, 2>, 2> a{};

  TinyMat() = default;
  explicit TinyMat(int dim) : n(dim) {
    a[0] = {T(0), T(0)};
    a[1] = {T(0), T(0)};
  }
  T& operator()(int i, int j) { return a[i][j]; }
  const T& operator()(int i, int j) const { return a[i][j]; }

  static TinyMat identity(int dim) {
    TinyMat m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = T(1);
    return m;
  }
};

template <class T>
TinyMat<T> operator+(const TinyMat<T>& x, const TinyMat<T>& y) {
  TinyMat<T> r(x.n);
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.n; ++j) r(i, j) = x(i, j) + y(i, j);
  return r;
}

template <class T>
TinyMat<T> operator-(const TinyMat<T>& x, const TinyMat<T>& y) {
  TinyMat<T> r(x.n);
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.n; ++j) r(i, j) = x(i, j) - y(i, j);
  return r;
}

template <class T, class S>
TinyMat<T> scale(const S& s, const TinyMat<T>& x) {
  TinyMat<T> r(x.n);
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.n; ++j) r(i, j) = s * x(i, j);
  return r;
}

template <class T>
T det(const TinyMat<T>& m) {
  if (m.n == 1) return m(0, 0);
  return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
}

template <class T>
TinyMat<T> inverse(const TinyMat<T>& m) {
  TinyMat<T> r(m.n);
  if (m.n == 1) {
    r(0, 0) = T(1) / m(0, 0);
    return r;
  }
  const T d = det(m);
  r(0, 0) = m(1, 1) / d;
  r(1, 1) = m(0, 0) / d;
  r(0, 1) = -m(0, 1) / d;
  r(1, 0) = -m(1, 0) / d;
  return r;
}

template <class T>
TinyVec<T> matvec(const TinyMat<T>& m, const TinyVec<T>& x) {
  TinyVec<T> r(m.n);
  for (int i = 0; i < m.n; ++i) {
    T s = T(0);
    for (int j = 0; j < m.n; ++j) s += m(i, j) * x[j];
    r[i] = s;
  }
  return r;
}

template <class T>
T quad_form(const TinyMat<T>& m, const TinyVec<T>& x) {
  T s = T(0);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) s += m(i, j) * x[i] * x[j];
  return s;
}

template <class T>
T dot(const TinyVec<T>& x, const TinyVec<T>& y) {
  T s = T(0);
  for (int i = 0; i < x.n; ++i) s += x[i] * y[i];
  return s;
}

// Smallest eigenvalue of a symmetric matrix, n <= 2 closed form.
inline double sym_min_eig(const TinyMat<double>& m) {
  if (m.n == 1) return m(0, 0);
  const double tr = m(0, 0) + m(1, 1);
  const double dt = det(m);
  const double disc = tr * tr / 4.0 - dt;
  const double s = disc > 0.0 ? std::sqrt(disc) : 0.0;
  return tr / 2.0 - s;
}

inline bool spd(const TinyMat<double>& m) {
  if (m.n == 1) return m(0, 0) > 0.0;
  return m(0, 0) > 0.0 && det(m) > 0.0;
}

} // namespace curvesolve
