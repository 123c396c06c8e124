#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "curvesolve/dual.hpp"
#include "curvesolve/errors.hpp"
#include "curvesolve/tiny.hpp"

namespace curvesolve {

enum class CurvatureKind { mean, sigma_k_root, gauss_root };

inline const char* curvature_kind_name(CurvatureKind k) {
  switch (k) {
    case CurvatureKind::mean: return "mean";
    case CurvatureKind::sigma_k_root: return "sigma_k_root";
    case CurvatureKind::gauss_root: return "gauss_root";
  }
  return "?";
}

namespace detail {

// Elementary symmetric polynomial sigma_j of the entries.
inline double elementary_symmetric(std::span<const double> k, int j) {
  const int n = static_cast<int>(k.size());
  if (j == 0) return 1.0;
  if (j > n) return 0.0;
  // poly[m] accumulates sigma_m of the prefix.
  std::vector<double> poly(static_cast<size_t>(j) + 1, 0.0);
  poly[0] = 1.0;
  for (int i = 0; i < n; ++i)
    for (int m = std::min(i + 1, j); m >= 1; --m) poly[m] += poly[m - 1] * k[i];
  return poly[j];
}

inline std::string format_point(std::span<const double> k) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < k.size(); ++i) os << (i ? ", " : "") << k[i];
  os << ")";
  return os.str();
}

} // namespace detail

// Symmetric monotone concave curvature function with its defining cone.
//   mean            F = sum kappa_i           on all of R^n
//   sigma_k_root    F = sigma_k(kappa)^{1/k}  on the Garding cone Gamma_k
//   gauss_root      F = (prod kappa_i)^{1/n}  on the positive cone
// All are positively homogeneous of degree one.
struct CurvatureFunction {
  CurvatureKind kind = CurvatureKind::mean;
  int k = 1; // order for sigma_k_root

  static CurvatureFunction mean() { return {CurvatureKind::mean, 1}; }
  static CurvatureFunction gauss_root() { return {CurvatureKind::gauss_root, 0}; }
  static CurvatureFunction sigma_root(int k) {
    if (k < 1) fail(ErrorKind::config, "curvature: sigma_k_root needs k >= 1");
    return {CurvatureKind::sigma_k_root, k};
  }

  std::string name() const {
    if (kind == CurvatureKind::sigma_k_root)
      return "sigma_k_root(" + std::to_string(k) + ")";
    return curvature_kind_name(kind);
  }

  // All evaluations run on an ascending copy so that permuted inputs produce
  // bitwise identical values.
  bool in_cone(std::span<const double> kappa) const {
    std::vector<double> ks(kappa.begin(), kappa.end());
    std::sort(ks.begin(), ks.end());
    switch (kind) {
      case CurvatureKind::mean:
        return true;
      case CurvatureKind::gauss_root:
        for (double v : ks)
          if (!(v > 0.0)) return false;
        return true;
      case CurvatureKind::sigma_k_root:
        for (int j = 1; j <= k; ++j)
          if (!(detail::elementary_symmetric(ks, j) > 0.0)) return false;
        return true;
    }
    return false;
  }

  double value(std::span<const double> kappa) const {
    if (!in_cone(kappa))
      fail(ErrorKind::cone, "curvature: point outside defining cone of " + name() +
                                ": kappa=" + detail::format_point(kappa));
    std::vector<double> ks(kappa.begin(), kappa.end());
    std::sort(ks.begin(), ks.end());
    const int n = static_cast<int>(ks.size());
    switch (kind) {
      case CurvatureKind::mean: {
        double s = 0.0;
        for (double v : ks) s += v;
        return s;
      }
      case CurvatureKind::gauss_root: {
        double p = 1.0;
        for (double v : ks) p *= v;
        return std::pow(p, 1.0 / n);
      }
      case CurvatureKind::sigma_k_root:
        return std::pow(detail::elementary_symmetric(ks, k), 1.0 / k);
    }
    return 0.0;
  }

  // Partial derivatives dF/dkappa_i; requires kappa strictly inside the cone.
  std::vector<double> gradient(std::span<const double> kappa) const {
    if (!in_cone(kappa))
      fail(ErrorKind::cone, "curvature: gradient outside cone of " + name() +
                                ": kappa=" + detail::format_point(kappa));
    const int n = static_cast<int>(kappa.size());
    std::vector<double> g(static_cast<size_t>(n), 0.0);
    switch (kind) {
      case CurvatureKind::mean:
        for (auto& v : g) v = 1.0;
        return g;
      case CurvatureKind::gauss_root: {
        const double F = value(kappa);
        for (int i = 0; i < n; ++i) {
          if (!(kappa[i] > 1e-300))
            fail(ErrorKind::cone, "curvature: gradient ill-conditioned at cone boundary");
          g[static_cast<size_t>(i)] = F / (n * kappa[i]);
        }
        return g;
      }
      case CurvatureKind::sigma_k_root: {
        std::vector<double> ks(kappa.begin(), kappa.end());
        std::sort(ks.begin(), ks.end());
        const double sk = detail::elementary_symmetric(ks, k);
        if (!(sk > 1e-300))
          fail(ErrorKind::cone, "curvature: gradient ill-conditioned at cone boundary");
        const double outer = std::pow(sk, 1.0 / k - 1.0) / k;
        for (int i = 0; i < n; ++i) {
          std::vector<double> without;
          without.reserve(static_cast<size_t>(n) - 1);
          for (int j = 0; j < n; ++j)
            if (j != i) without.push_back(kappa[j]);
          std::sort(without.begin(), without.end());
          g[static_cast<size_t>(i)] = outer * detail::elementary_symmetric(without, k - 1);
        }
        return g;
      }
    }
    return g;
  }

  // Largest s >= 0 with kappa - s*(1,...,1) still in the cone.
  double cone_margin(std::span<const double> kappa) const {
    if (!in_cone(kappa)) return -1.0;
    const int n = static_cast<int>(kappa.size());
    switch (kind) {
      case CurvatureKind::mean:
        return std::numeric_limits<double>::infinity();
      case CurvatureKind::gauss_root: {
        double m = kappa[0];
        for (double v : kappa) m = std::min(m, v);
        return m;
      }
      case CurvatureKind::sigma_k_root: {
        double lo = 0.0;
        double hi = 0.0;
        for (double v : kappa) hi = std::max(hi, std::abs(v));
        hi = 2.0 * hi + 1.0;
        std::vector<double> shifted(static_cast<size_t>(n));
        auto inside = [&](double s) {
          for (int i = 0; i < n; ++i) shifted[static_cast<size_t>(i)] = kappa[i] - s;
          return in_cone(shifted);
        };
        if (inside(hi)) return hi;
        for (int it = 0; it < 80; ++it) {
          const double mid = 0.5 * (lo + hi);
          (inside(mid) ? lo : hi) = mid;
        }
        return lo;
      }
    }
    return 0.0;
  }
};

// ---------------------------------------------------------------------------
// Generalized symmetric eigenvalue machinery for the pencil (h, g), g SPD.
// ---------------------------------------------------------------------------

struct PrincipalCurvatures {
  Eigen::VectorXd kappa;  // ascending
  Eigen::MatrixXd frame;  // columns xi_a with xi^T g xi = I
};

inline PrincipalCurvatures principal_curvatures(const Eigen::MatrixXd& h,
                                                const Eigen::MatrixXd& g) {
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success)
    fail(ErrorKind::metric, "pencil: metric is not positive definite");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(h, g);
  if (es.info() != Eigen::Success)
    fail(ErrorKind::internal, "pencil: eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

// d kappa_a = xi_a^T (dh - kappa_a dg) xi_a, so for scalar F(kappa):
//   dF/dh = sum_a F_a xi_a xi_a^T,   dF/dg = -sum_a F_a kappa_a xi_a xi_a^T.
// Near-degenerate eigenvalues are grouped (threshold 1e-8 relative) and their
// F_a and kappa_a averaged, which keeps the projections basis-independent.
struct PencilGradient {
  double value = 0.0;
  Eigen::MatrixXd dF_dh;
  Eigen::MatrixXd dF_dg;
  double min_Fa = 0.0;
};

inline PencilGradient matrix_gradient(const CurvatureFunction& F, const Eigen::MatrixXd& h,
                                      const Eigen::MatrixXd& g) {
  const auto pc = principal_curvatures(h, g);
  const int n = static_cast<int>(pc.kappa.size());
  std::vector<double> kv(pc.kappa.data(), pc.kappa.data() + n);
  const double val = F.value(kv);
  const auto Fa = F.gradient(kv);

  double scale = 1.0;
  for (double v : kv) scale = std::max(scale, std::abs(v));
  const double tol = 1e-8 * scale;

  PencilGradient out;
  out.value = val;
  out.dF_dh = Eigen::MatrixXd::Zero(n, n);
  out.dF_dg = Eigen::MatrixXd::Zero(n, n);
  out.min_Fa = Fa[0];
  for (double f : Fa) out.min_Fa = std::min(out.min_Fa, f);

  int a = 0;
  while (a < n) {
    int b = a;
    while (b + 1 < n && pc.kappa[b + 1] - pc.kappa[b] <= tol) ++b;
    double fbar = 0.0, kbar = 0.0;
    for (int m = a; m <= b; ++m) {
      fbar += Fa[static_cast<size_t>(m)];
      kbar += pc.kappa[m];
    }
    const int cnt = b - a + 1;
    fbar /= cnt;
    kbar /= cnt;
    Eigen::MatrixXd proj = Eigen::MatrixXd::Zero(n, n);
    for (int m = a; m <= b; ++m)
      proj += pc.frame.col(m) * pc.frame.col(m).transpose();
    out.dF_dh += fbar * proj;
    out.dF_dg += -fbar * kbar * proj;
    a = b + 1;
  }
  return out;
}

// Check the spectral shift identity kappa_i(h + s g, g) = kappa_i(h, g) + s
// and monotonicity under a positive semidefinite increment.
struct MinMaxReport {
  bool ok = true;
  std::string what;
};

inline MinMaxReport minmax_shift_check(const Eigen::MatrixXd& h, const Eigen::MatrixXd& g,
                                       double s) {
  MinMaxReport rep;
  const auto base = principal_curvatures(h, g);
  const auto shifted = principal_curvatures(h + s * g, g);
  for (int i = 0; i < base.kappa.size(); ++i) {
    if (std::abs(shifted.kappa[i] - (base.kappa[i] + s)) > 1e-10) {
      rep.ok = false;
      rep.what = "shift identity violated at index " + std::to_string(i);
      return rep;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Closed-form pencil for the solver (surface dimension n <= 2), with the value
// and the (dF/dh, dF/dg) matrices used as the exact tangent rule when the
// geometry pipeline runs on Dual scalars.
// ---------------------------------------------------------------------------

struct PencilValue {
  double F = 0.0;
  TinyVec<double> kappa;
  TinyMat<double> dF_dh;
  TinyMat<double> dF_dg;
  double min_Fa = 0.0;
  bool admissible = true;
};

inline TinyVec<double> pencil_eigenvalues(const TinyMat<double>& h, const TinyMat<double>& g) {
  const int n = h.n;
  TinyVec<double> kap(n);
  if (!spd(g)) fail(ErrorKind::metric, "pencil: metric is not positive definite");
  if (n == 1) {
    kap[0] = h(0, 0) / g(0, 0);
    return kap;
  }
  // Cholesky g = L L^T with L = [[a,0],[b,c]], then the symmetric 2x2
  // eigenvalues of A = L^{-1} h L^{-T}.
  const double a = std::sqrt(g(0, 0));
  const double b = g(1, 0) / a;
  const double c = std::sqrt(g(1, 1) - b * b);
  const double A00 = h(0, 0) / (a * a);
  const double A01 = (h(0, 1) / a - b * h(0, 0) / (a * a)) / c;
  const double A11 = (h(1, 1) - 2.0 * b * h(0, 1) / a + b * b * h(0, 0) / (a * a)) / (c * c);
  const double mean = 0.5 * (A00 + A11);
  const double half = 0.5 * (A00 - A11);
  const double r = std::sqrt(half * half + A01 * A01);
  kap[0] = mean - r;
  kap[1] = mean + r;
  return kap;
}

inline PencilValue eval_pencil(const CurvatureFunction& F, const TinyMat<double>& h,
                               const TinyMat<double>& g) {
  const int n = h.n;
  PencilValue out;
  out.kappa = TinyVec<double>(n);
  out.dF_dh = TinyMat<double>(n);
  out.dF_dg = TinyMat<double>(n);
  if (!spd(g)) fail(ErrorKind::metric, "pencil: metric is not positive definite");

  if (n == 1) {
    const double kap = h(0, 0) / g(0, 0);
    out.kappa[0] = kap;
    if (!F.in_cone(std::span<const double>(&kap, 1))) {
      out.admissible = false;
      return out;
    }
    out.F = F.value(std::span<const double>(&kap, 1));
    const auto Fa = F.gradient(std::span<const double>(&kap, 1));
    out.min_Fa = Fa[0];
    const double xi2 = 1.0 / g(0, 0); // xi * xi for the g-normalized eigenvector
    out.dF_dh(0, 0) = Fa[0] * xi2;
    out.dF_dg(0, 0) = -Fa[0] * kap * xi2;
    return out;
  }

  // n == 2: Cholesky reduction, closed-form eigenpairs.
  const double a = std::sqrt(g(0, 0));
  const double b = g(1, 0) / a;
  const double c = std::sqrt(g(1, 1) - b * b);
  const double A00 = h(0, 0) / (a * a);
  const double A01 = (h(0, 1) / a - b * h(0, 0) / (a * a)) / c;
  const double A11 = (h(1, 1) - 2.0 * b * h(0, 1) / a + b * b * h(0, 0) / (a * a)) / (c * c);
  const double m = 0.5 * (A00 + A11);
  const double half = 0.5 * (A00 - A11);
  const double r = std::sqrt(half * half + A01 * A01);
  out.kappa[0] = m - r;
  out.kappa[1] = m + r;

  std::array<double, 2> kv{out.kappa[0], out.kappa[1]};
  if (!F.in_cone(kv)) {
    out.admissible = false;
    return out;
  }
  out.F = F.value(kv);
  auto Fa = F.gradient(kv);
  const double scale = std::max({1.0, std::abs(kv[0]), std::abs(kv[1])});
  if (out.kappa[1] - out.kappa[0] <= 1e-8 * scale) {
    const double fbar = 0.5 * (Fa[0] + Fa[1]);
    Fa[0] = Fa[1] = fbar;
  }
  out.min_Fa = std::min(Fa[0], Fa[1]);

  // Eigenvectors of A (orthonormal), then xi_a = L^{-T} v_a is g-orthonormal.
  std::array<std::array<double, 2>, 2> v{};
  if (r > 1e-300 && (std::abs(A01) > 1e-300 || std::abs(out.kappa[1] - A00) > 1e-300)) {
    double vx = A01, vy = out.kappa[1] - A00;
    double nrm = std::sqrt(vx * vx + vy * vy);
    if (nrm < 1e-300) { vx = 1.0; vy = 0.0; nrm = 1.0; }
    v[1] = {vx / nrm, vy / nrm};  // eigenvector for kappa[1]
    v[0] = {-v[1][1], v[1][0]};   // orthogonal partner for kappa[0]
  } else {
    v[0] = {1.0, 0.0};
    v[1] = {0.0, 1.0};
  }
  // L^{-T} = [[1/a, -b/(a c)], [0, 1/c]]
  for (int s = 0; s < 2; ++s) {
    const double xi0 = v[s][0] / a - b * v[s][1] / (a * c);
    const double xi1 = v[s][1] / c;
    const double f = Fa[static_cast<size_t>(s)];
    const double kap = out.kappa[s];
    const double p00 = xi0 * xi0, p01 = xi0 * xi1, p11 = xi1 * xi1;
    out.dF_dh(0, 0) += f * p00;
    out.dF_dh(0, 1) += f * p01;
    out.dF_dh(1, 0) += f * p01;
    out.dF_dh(1, 1) += f * p11;
    out.dF_dg(0, 0) -= f * kap * p00;
    out.dF_dg(0, 1) -= f * kap * p01;
    out.dF_dg(1, 0) -= f * kap * p01;
    out.dF_dg(1, 1) -= f * kap * p11;
  }
  return out;
}

// Scalar-generic front end used by the templated geometry pipeline.
inline double pencil_value(const CurvatureFunction& F, const TinyMat<double>& h,
                           const TinyMat<double>& g, bool* admissible = nullptr,
                           TinyVec<double>* kappa_out = nullptr, double* min_Fa = nullptr) {
  const PencilValue pv = eval_pencil(F, h, g);
  if (admissible) *admissible = pv.admissible;
  if (kappa_out) *kappa_out = pv.kappa;
  if (min_Fa) *min_Fa = pv.min_Fa;
  if (!pv.admissible && !admissible)
    fail(ErrorKind::cone, "curvature: inadmissible point in pencil evaluation");
  return pv.F;
}

inline Dual pencil_value(const CurvatureFunction& F, const TinyMat<Dual>& h,
                         const TinyMat<Dual>& g, bool* admissible = nullptr,
                         TinyVec<double>* kappa_out = nullptr, double* min_Fa = nullptr) {
  const int n = h.n;
  TinyMat<double> hv(n), gv(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      hv(i, j) = h(i, j).v;
      gv(i, j) = g(i, j).v;
    }
  const PencilValue pv = eval_pencil(F, hv, gv);
  if (admissible) *admissible = pv.admissible;
  if (kappa_out) *kappa_out = pv.kappa;
  if (min_Fa) *min_Fa = pv.min_Fa;
  if (!pv.admissible) {
    if (!admissible)
      fail(ErrorKind::cone, "curvature: inadmissible point in pencil evaluation");
    return Dual(0.0, 0.0);
  }
  double tangent = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      tangent += pv.dF_dh(i, j) * h(i, j).d + pv.dF_dg(i, j) * g(i, j).d;
  return Dual(pv.F, tangent);
}

} // namespace curvesolve
