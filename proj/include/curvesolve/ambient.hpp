#pragma once

#include <array>
#include <cmath>
#include <string>

#include "curvesolve/errors.hpp"
#include "curvesolve/tiny.hpp"

namespace curvesolve {

enum class AmbientKind { euclidean_polar, sphere_polar, hyperbolic_polar, warped, psi_test };

inline const char* ambient_kind_name(AmbientKind k) {
  switch (k) {
    case AmbientKind::euclidean_polar: return "euclidean_polar";
    case AmbientKind::sphere_polar: return "sphere_polar";
    case AmbientKind::hyperbolic_polar: return "hyperbolic_polar";
    case AmbientKind::warped: return "warped";
    case AmbientKind::psi_test: return "psi_test";
  }
  return "?";
}

// Slice metric with its first derivatives at one point.
template <class T>
struct SliceMetric {
  TinyMat<T> sigma;
  TinyMat<T> dsigma_dx0;
  std::array<TinyMat<T>, 2> dsigma_dang;
  TinyMat<T> inv;
};

// Christoffel symbols of the product metric (dx0)^2 + sigma_ij dx^i dx^j.
// The 0-indexed symbols with at most one spatial index vanish for this
// product structure and are kept as explicit fields.
template <class T>
struct ProductChristoffels {
  T g000 = T(0);              // zero for product metrics
  TinyVec<T> g00i;            // zero for product metrics
  TinyMat<T> g0ij;            // -1/2 d0 sigma_ij
  TinyMat<T> gk0i;            // (k,i):  1/2 sigma^{kl} d0 sigma_li
  std::array<TinyMat<T>, 2> gkij; // gkij[k](i,j)
};

// Ambient manifold in a normal Gaussian coordinate system:
//   ds^2 = e^{2 psi} { (dx^0)^2 + sigma_ij(x^0, x) dx^i dx^j },
// with sigma_ij = rho(x^0)^2 * (round metric on the base sphere).
// Built-in space forms use rho = x0 / sin x0 / sinh x0 and psi = 0; `warped`
// takes polynomial rho coefficients; `psi_test` is a perturbed-psi fixture
// used by property tests only.
struct AmbientManifold {
  AmbientKind kind = AmbientKind::euclidean_polar;
  int dim_n = 1;
  std::array<double, 4> warp{0.0, 1.0, 0.0, 0.0}; // rho = w0 + w1 x + w2 x^2 + w3 x^3
  double x0_min = 1e-9;
  double x0_max = 1e12;
  double psi_amp = 0.1; // psi_test only

  static AmbientManifold make(AmbientKind kind, int dim_n) {
    AmbientManifold m;
    m.kind = kind;
    m.dim_n = dim_n;
    if (dim_n < 1 || dim_n > 2) fail(ErrorKind::config, "ambient: dim_n must be 1 or 2");
    switch (kind) {
      case AmbientKind::sphere_polar:
        m.x0_min = 1e-9;
        m.x0_max = M_PI - 1e-9;
        break;
      case AmbientKind::warped:
        m.x0_min = -1e12;
        m.x0_max = 1e12;
        break;
      default:
        m.x0_min = 1e-9;
        m.x0_max = 1e12;
        break;
    }
    return m;
  }

  void check_chart(double x0) const {
    if (!(x0 > x0_min && x0 < x0_max))
      fail(ErrorKind::domain, "ambient: coordinate x0=" + std::to_string(x0) +
                                  " outside chart (" + std::to_string(x0_min) + ", " +
                                  std::to_string(x0_max) + ")");
  }
  bool in_chart(double x0) const { return x0 > x0_min && x0 < x0_max; }

  template <class T>
  T rho(T x0) const {
    using std::sin; using std::sinh;
    switch (kind) {
      case AmbientKind::euclidean_polar:
      case AmbientKind::psi_test: return x0;
      case AmbientKind::sphere_polar: return sin(x0);
      case AmbientKind::hyperbolic_polar: return sinh(x0);
      case AmbientKind::warped:
        return T(warp[0]) + x0 * (T(warp[1]) + x0 * (T(warp[2]) + x0 * T(warp[3])));
    }
    return T(0);
  }

  template <class T>
  T rho_d(T x0) const {
    using std::cos; using std::cosh;
    switch (kind) {
      case AmbientKind::euclidean_polar:
      case AmbientKind::psi_test: return T(1);
      case AmbientKind::sphere_polar: return cos(x0);
      case AmbientKind::hyperbolic_polar: return cosh(x0);
      case AmbientKind::warped:
        return T(warp[1]) + x0 * (2.0 * T(warp[2]) + x0 * (3.0 * T(warp[3])));
    }
    return T(0);
  }

  bool has_psi() const { return kind == AmbientKind::psi_test; }

  template <class T>
  T psi(T x0, const std::array<double, 2>& x) const {
    using std::sin;
    if (kind != AmbientKind::psi_test) return T(0);
    const double ang = dim_n == 1 ? std::cos(x[0]) : std::sin(x[0]) * std::cos(x[1]);
    return psi_amp * sin(x0) * ang;
  }

  template <class T>
  T psi_d0(T x0, const std::array<double, 2>& x) const {
    using std::cos;
    if (kind != AmbientKind::psi_test) return T(0);
    const double ang = dim_n == 1 ? std::cos(x[0]) : std::sin(x[0]) * std::cos(x[1]);
    return psi_amp * cos(x0) * ang;
  }

  template <class T>
  TinyVec<T> psi_dang(T x0, const std::array<double, 2>& x) const {
    using std::sin;
    TinyVec<T> g(dim_n);
    if (kind != AmbientKind::psi_test) return g;
    if (dim_n == 1) {
      g[0] = psi_amp * sin(x0) * (-std::sin(x[0]));
    } else {
      g[0] = psi_amp * sin(x0) * (std::cos(x[0]) * std::cos(x[1]));
      g[1] = psi_amp * sin(x0) * (-std::sin(x[0]) * std::sin(x[1]));
    }
    return g;
  }

  // Round reference metric on the base: 1 for n=1, diag(1, sin^2 phi) for n=2.
  TinyMat<double> sigma_hat(const std::array<double, 2>& x) const {
    TinyMat<double> s(dim_n);
    s(0, 0) = 1.0;
    if (dim_n == 2) s(1, 1) = std::sin(x[0]) * std::sin(x[0]);
    return s;
  }

  std::array<TinyMat<double>, 2> sigma_hat_dang(const std::array<double, 2>& x) const {
    std::array<TinyMat<double>, 2> d{TinyMat<double>(dim_n), TinyMat<double>(dim_n)};
    if (dim_n == 2) d[0](1, 1) = 2.0 * std::sin(x[0]) * std::cos(x[0]);
    return d;
  }

  template <class T>
  SliceMetric<T> slice(T x0, const std::array<double, 2>& x) const {
    const TinyMat<double> sh = sigma_hat(x);
    const auto dsh = sigma_hat_dang(x);
    const T r = rho(x0);
    const T rd = rho_d(x0);
    const T r2 = r * r;

    SliceMetric<T> out;
    out.sigma = TinyMat<T>(dim_n);
    out.dsigma_dx0 = TinyMat<T>(dim_n);
    out.dsigma_dang = {TinyMat<T>(dim_n), TinyMat<T>(dim_n)};
    for (int i = 0; i < dim_n; ++i)
      for (int j = 0; j < dim_n; ++j) {
        out.sigma(i, j) = r2 * sh(i, j);
        out.dsigma_dx0(i, j) = 2.0 * r * rd * sh(i, j);
        for (int k = 0; k < dim_n; ++k) out.dsigma_dang[k](i, j) = r2 * dsh[k](i, j);
      }
    out.inv = inverse(out.sigma);
    return out;
  }

  template <class T>
  ProductChristoffels<T> christoffels(T x0, const std::array<double, 2>& x) const {
    const SliceMetric<T> sm = slice(x0, x);
    ProductChristoffels<T> c;
    c.g00i = TinyVec<T>(dim_n);
    c.g0ij = TinyMat<T>(dim_n);
    c.gk0i = TinyMat<T>(dim_n);
    c.gkij = {TinyMat<T>(dim_n), TinyMat<T>(dim_n)};

    for (int i = 0; i < dim_n; ++i)
      for (int j = 0; j < dim_n; ++j) c.g0ij(i, j) = -0.5 * sm.dsigma_dx0(i, j);

    for (int k = 0; k < dim_n; ++k)
      for (int i = 0; i < dim_n; ++i) {
        T s = T(0);
        for (int l = 0; l < dim_n; ++l) s += sm.inv(k, l) * sm.dsigma_dx0(l, i);
        c.gk0i(k, i) = 0.5 * s;
      }

    for (int k = 0; k < dim_n; ++k)
      for (int i = 0; i < dim_n; ++i)
        for (int j = 0; j < dim_n; ++j) {
          T s = T(0);
          for (int l = 0; l < dim_n; ++l)
            s += sm.inv(k, l) * (sm.dsigma_dang[i](l, j) + sm.dsigma_dang[j](l, i) -
                                 sm.dsigma_dang[l](i, j));
          c.gkij[k](i, j) = 0.5 * s;
        }
    return c;
  }

  // --- strictly convex reference function ---
  // chi = integral of rho, so Hess chi = rho'(x0) * (ambient metric) for the
  // psi = 0 built-ins; positive definite wherever rho' > 0.
  bool chi_supported() const { return kind != AmbientKind::psi_test; }

  template <class T>
  T chi(T x0) const {
    using std::cos; using std::cosh;
    switch (kind) {
      case AmbientKind::euclidean_polar: return 0.5 * x0 * x0;
      case AmbientKind::sphere_polar: return -cos(x0);
      case AmbientKind::hyperbolic_polar: return cosh(x0);
      case AmbientKind::warped:
        return x0 * (T(warp[0]) + x0 * (T(warp[1]) / 2.0 +
                     x0 * (T(warp[2]) / 3.0 + x0 * T(warp[3]) / 4.0)));
      case AmbientKind::psi_test:
        fail(ErrorKind::unsupported, "ambient: no convex reference for the psi fixture");
    }
    return T(0);
  }

  // Full (n+1)x(n+1) coordinate Hessian of chi at (x0, x).
  std::array<std::array<double, 3>, 3> chi_hessian(double x0, const std::array<double, 2>& x) const {
    if (!chi_supported())
      fail(ErrorKind::unsupported, "ambient: no convex reference for the psi fixture");
    const double c = rho_d(x0);
    const SliceMetric<double> sm = slice(x0, x);
    std::array<std::array<double, 3>, 3> H{};
    H[0][0] = c;
    for (int i = 0; i < dim_n; ++i)
      for (int j = 0; j < dim_n; ++j) H[i + 1][j + 1] = c * sm.sigma(i, j);
    return H;
  }
};

} // namespace curvesolve
