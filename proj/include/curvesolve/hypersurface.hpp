#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "curvesolve/ambient.hpp"
#include "curvesolve/curvature.hpp"
#include "curvesolve/dual.hpp"
#include "curvesolve/errors.hpp"
#include "curvesolve/grid.hpp"
#include "curvesolve/tiny.hpp"

namespace curvesolve {

// All nodal quantities of the graph x0 = u(x): gradient, v, unit normal,
// induced metric and second fundamental form. Templated on the scalar so the
// identical code path serves both plain evaluation and tangent propagation.
template <class T>
struct NodalGeometry {
  int dim = 1;
  std::vector<T> u;
  std::vector<TinyVec<T>> du;      // partial derivatives u_i
  std::vector<T> graddsq;          // sigma^{ij} u_i u_j
  std::vector<T> v;                // sqrt(1 + |Du|^2)
  std::vector<T> nu0;              // normal, x0 component
  std::vector<TinyVec<T>> nu_ang;  // normal, angular components
  std::vector<TinyMat<T>> g;       // induced metric
  std::vector<TinyMat<T>> h;       // second fundamental form
};

namespace detail {

// Independent metric component fields with their pole-reflection parity.
inline constexpr int parity_of(int i, int j) { return (i == 0) == (j == 0) ? 1 : -1; }

} // namespace detail

template <class T>
NodalGeometry<T> compute_geometry(const AmbientManifold& m, const Grid& grid,
                                  std::span<const T> u) {
  const int N = grid.size();
  const int dim = grid.dim_n;
  NodalGeometry<T> geo;
  geo.dim = dim;
  geo.u.assign(u.begin(), u.end());
  geo.du.assign(N, TinyVec<T>(dim));
  geo.graddsq.assign(N, T(0));
  geo.v.assign(N, T(0));
  geo.nu0.assign(N, T(0));
  geo.nu_ang.assign(N, TinyVec<T>(dim));
  geo.g.assign(N, TinyMat<T>(dim));
  geo.h.assign(N, TinyMat<T>(dim));

  for (int p = 0; p < N; ++p) m.check_chart(value_of(u[p]));

  // First and second derivative fields of u.
  std::vector<std::vector<T>> du_f(dim, std::vector<T>(N));
  for (int d = 0; d < dim; ++d)
    for (int p = 0; p < N; ++p) du_f[d][p] = grid.d1(u, p, d);
  std::vector<std::vector<T>> d2u_f(dim, std::vector<T>(N));
  for (int d = 0; d < dim; ++d)
    for (int p = 0; p < N; ++p) d2u_f[d][p] = grid.d2(u, p, d);
  std::vector<T> mixed_f;
  if (dim == 2) {
    mixed_f.resize(N);
    std::span<const T> duth(du_f[1]);
    for (int p = 0; p < N; ++p) mixed_f[p] = grid.d1(duth, p, 0, 1);
  }

  // Pointwise pieces that need only u and Du.
  std::vector<SliceMetric<T>> sm(N);
  std::vector<T> psi_v(N), psi0_v(N);
  std::vector<TinyVec<T>> psig_v(N);
  for (int p = 0; p < N; ++p) {
    const auto x = grid.coords(p);
    sm[p] = m.slice(u[p], x);
    psi_v[p] = m.psi(u[p], x);
    psi0_v[p] = m.psi_d0(u[p], x);
    psig_v[p] = m.psi_dang(u[p], x);

    TinyVec<T> du(dim);
    for (int d = 0; d < dim; ++d) du[d] = du_f[d][p];
    geo.du[p] = du;

    T dd = T(0);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) dd += sm[p].inv(i, j) * du[i] * du[j];
    geo.graddsq[p] = dd;
    using std::sqrt;
    using std::exp;
    geo.v[p] = sqrt(T(1) + dd);
    const T epsi = exp(-psi_v[p]);
    geo.nu0[p] = epsi / geo.v[p];
    for (int k = 0; k < dim; ++k) {
      T s = T(0);
      for (int l = 0; l < dim; ++l) s += sm[p].inv(k, l) * du[l];
      geo.nu_ang[p][k] = -epsi / geo.v[p] * s;
    }
    const T e2psi = exp(2.0 * psi_v[p]);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        geo.g[p](i, j) = e2psi * (du[i] * du[j] + sm[p].sigma(i, j));
  }

  // Derivatives of the induced metric field, honoring component parity at the
  // poles; they feed the Christoffel symbols of g.
  const int ncomp = dim == 1 ? 1 : 3;
  static constexpr std::array<std::array<int, 2>, 3> comp_idx = {{{0, 0}, {0, 1}, {1, 1}}};
  std::vector<std::vector<T>> gcomp(ncomp, std::vector<T>(N));
  for (int c = 0; c < ncomp; ++c)
    for (int p = 0; p < N; ++p) gcomp[c][p] = geo.g[p](comp_idx[c][0], comp_idx[c][1]);
  // dg[d][c][p] = partial_d g_c at node p
  std::vector<std::vector<std::vector<T>>> dg(
      dim, std::vector<std::vector<T>>(ncomp, std::vector<T>(N)));
  for (int d = 0; d < dim; ++d)
    for (int c = 0; c < ncomp; ++c) {
      const int par = detail::parity_of(comp_idx[c][0], comp_idx[c][1]);
      std::span<const T> f(gcomp[c]);
      for (int p = 0; p < N; ++p) dg[d][c][p] = grid.d1(f, p, d, par);
    }
  auto dg_at = [&](int d, int i, int j, int p) -> T {
    if (dim == 1) return dg[0][0][p];
    if (i == 0 && j == 0) return dg[d][0][p];
    if (i == 1 && j == 1) return dg[d][2][p];
    return dg[d][1][p];
  };

  // Second fundamental form from the graph formula: covariant Hessian of u
  // w.r.t. the induced metric plus the ambient Christoffel terms,
  //   h_ij = -v e^psi ( phi_ij + G^0_00 u_i u_j + 2 G^0_0(i u_j) + G^0_ij ).
  for (int p = 0; p < N; ++p) {
    const TinyMat<T> ginv = inverse(geo.g[p]);
    const TinyVec<T>& du = geo.du[p];

    TinyMat<T> phi(dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        T d2;
        if (dim == 1) d2 = d2u_f[0][p];
        else if (i == j) d2 = d2u_f[i][p];
        else d2 = mixed_f[p];
        T chris = T(0);
        for (int kk = 0; kk < dim; ++kk) {
          T gam = T(0);
          for (int l = 0; l < dim; ++l)
            gam += ginv(kk, l) * (dg_at(i, l, j, p) + dg_at(j, l, i, p) - dg_at(l, i, j, p));
          chris += 0.5 * gam * du[kk];
        }
        phi(i, j) = d2 - chris;
      }

    const T psi0 = psi0_v[p];
    const TinyVec<T>& psig = psig_v[p];
    using std::exp;
    const T vexp = geo.v[p] * exp(psi_v[p]);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        T bracket = phi(i, j);
        bracket += psi0 * du[i] * du[j];
        bracket += psig[i] * du[j] + psig[j] * du[i];
        bracket += -0.5 * sm[p].dsigma_dx0(i, j) - sm[p].sigma(i, j) * psi0;
        geo.h[p](i, j) = -vexp * bracket;
      }
  }
  return geo;
}

// Independent evaluation of h_ij through the Hessian w.r.t. the pulled-back
// slice metric gamma_ij(x) = sigma_ij(u(x), x):
//   e^{-psi} v^{-1} h_ij = -v^{-2} phi_;ij + hbar_ij + v^{-1} psi_a nub^a gt_ij
// with hbar_ij = 1/2 d0 sigma_ij, gt_ij = u_i u_j + sigma_ij, nub = e^psi nu.
// Slice-metric derivatives enter analytically here, so the two routes share no
// finite-difference machinery beyond the derivatives of u itself.
inline std::vector<TinyMat<double>> hessian_form_crosscheck(const AmbientManifold& m,
                                                            const Grid& grid,
                                                            std::span<const double> u) {
  const int N = grid.size();
  const int dim = grid.dim_n;
  for (int p = 0; p < N; ++p) m.check_chart(u[p]);

  std::vector<std::vector<double>> du_f(dim, std::vector<double>(N));
  for (int d = 0; d < dim; ++d)
    for (int p = 0; p < N; ++p) du_f[d][p] = grid.d1(u, p, d);
  std::vector<std::vector<double>> d2u_f(dim, std::vector<double>(N));
  for (int d = 0; d < dim; ++d)
    for (int p = 0; p < N; ++p) d2u_f[d][p] = grid.d2(u, p, d);
  std::vector<double> mixed_f;
  if (dim == 2) {
    mixed_f.resize(N);
    std::span<const double> duth(du_f[1]);
    for (int p = 0; p < N; ++p) mixed_f[p] = grid.d1(duth, p, 0, 1);
  }

  std::vector<TinyMat<double>> out(N, TinyMat<double>(dim));
  for (int p = 0; p < N; ++p) {
    const auto x = grid.coords(p);
    const auto sm = m.slice(u[p], x);
    TinyVec<double> du(dim);
    for (int d = 0; d < dim; ++d) du[d] = du_f[d][p];

    double dd = 0.0;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) dd += sm.inv(i, j) * du[i] * du[j];
    const double v2 = 1.0 + dd;
    const double v = std::sqrt(v2);

    // Christoffels of gamma(x) = sigma(u(x), x); the x0 dependence enters
    // through the chain term u_k * d0 sigma.
    auto dgamma = [&](int d, int i, int j) {
      return sm.dsigma_dang[d](i, j) + du[d] * sm.dsigma_dx0(i, j);
    };
    TinyMat<double> phi(dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        double d2;
        if (dim == 1) d2 = d2u_f[0][p];
        else if (i == j) d2 = d2u_f[i][p];
        else d2 = mixed_f[p];
        double chris = 0.0;
        for (int kk = 0; kk < dim; ++kk) {
          double gam = 0.0;
          for (int l = 0; l < dim; ++l)
            gam += sm.inv(kk, l) * (dgamma(i, l, j) + dgamma(j, l, i) - dgamma(l, i, j));
          chris += 0.5 * gam * du[kk];
        }
        phi(i, j) = d2 - chris;
      }

    const double psi = m.psi(u[p], x);
    const double psi0 = m.psi_d0(u[p], x);
    const auto psig = m.psi_dang(u[p], x);
    // psi_alpha nub^alpha with nub = v^{-1} (1, -sigma^{kl} u_l)
    double psi_nub = psi0 / v;
    for (int k = 0; k < dim; ++k) {
      double s = 0.0;
      for (int l = 0; l < dim; ++l) s += sm.inv(k, l) * du[l];
      psi_nub -= psig[k] * s / v;
    }

    const double vexp = v * std::exp(psi);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        const double gt = du[i] * du[j] + sm.sigma(i, j);
        out[p](i, j) =
            vexp * (-phi(i, j) / v2 + 0.5 * sm.dsigma_dx0(i, j) + psi_nub / v * gt);
      }
  }
  return out;
}

// Graph state with cached geometry and nodal principal curvatures.
struct GraphState {
  NodalGeometry<double> geo;
  std::vector<TinyVec<double>> kappa; // ascending per node

  int size() const { return static_cast<int>(geo.u.size()); }
  int dim() const { return geo.dim; }
};

inline GraphState graph_quantities(const AmbientManifold& m, const Grid& grid,
                                   std::span<const double> u) {
  GraphState st;
  st.geo = compute_geometry<double>(m, grid, u);
  const int N = grid.size();
  st.kappa.assign(N, TinyVec<double>(grid.dim_n));
  for (int p = 0; p < N; ++p) {
    if (!spd(st.geo.g[p]))
      fail(ErrorKind::metric, "graph: induced metric not positive definite at node " +
                                  std::to_string(p));
    st.kappa[p] = pencil_eigenvalues(st.geo.h[p], st.geo.g[p]);
  }
  return st;
}

struct AdmissibilityReport {
  bool admissible = true;
  std::vector<int> violating_nodes;
  std::vector<double> margins; // distance to the cone boundary along -(1,...,1)
};

inline AdmissibilityReport admissibility(const GraphState& st, const CurvatureFunction& F) {
  AdmissibilityReport rep;
  const int N = st.size();
  rep.margins.resize(static_cast<size_t>(N));
  for (int p = 0; p < N; ++p) {
    std::array<double, 2> kv{st.kappa[p][0], st.dim() == 2 ? st.kappa[p][1] : 0.0};
    std::span<const double> ks(kv.data(), static_cast<size_t>(st.dim()));
    const double margin = F.cone_margin(ks);
    rep.margins[static_cast<size_t>(p)] = margin;
    if (!F.in_cone(ks)) {
      rep.admissible = false;
      rep.violating_nodes.push_back(p);
    }
  }
  return rep;
}

// Curvature of the embedded curve for n=1 space forms, by the parametric
// formula in the embedding space. Shares nothing with the graph formula
// except the derivative stencils applied to the embedding components.
inline std::vector<double> embedding_oracle(std::span<const double> u, const Grid& grid,
                                            const AmbientManifold& m) {
  if (grid.dim_n != 1)
    fail(ErrorKind::unsupported, "embedding oracle: only n=1 is supported");
  if (m.kind != AmbientKind::euclidean_polar && m.kind != AmbientKind::sphere_polar &&
      m.kind != AmbientKind::hyperbolic_polar)
    fail(ErrorKind::unsupported, "embedding oracle: ambient has no built-in embedding");

  const int N = grid.size();
  std::array<std::vector<double>, 3> P;
  int ncomp = m.kind == AmbientKind::euclidean_polar ? 2 : 3;
  for (int c = 0; c < ncomp; ++c) P[static_cast<size_t>(c)].resize(static_cast<size_t>(N));
  for (int p = 0; p < N; ++p) {
    const double th = grid.theta(p);
    const double r = u[p];
    switch (m.kind) {
      case AmbientKind::euclidean_polar:
        P[0][static_cast<size_t>(p)] = r * std::cos(th);
        P[1][static_cast<size_t>(p)] = r * std::sin(th);
        break;
      case AmbientKind::sphere_polar:
        P[0][static_cast<size_t>(p)] = std::sin(r) * std::cos(th);
        P[1][static_cast<size_t>(p)] = std::sin(r) * std::sin(th);
        P[2][static_cast<size_t>(p)] = std::cos(r);
        break;
      default:
        P[0][static_cast<size_t>(p)] = std::sinh(r) * std::cos(th);
        P[1][static_cast<size_t>(p)] = std::sinh(r) * std::sin(th);
        P[2][static_cast<size_t>(p)] = std::cosh(r);
        break;
    }
  }

  std::vector<double> kappa(static_cast<size_t>(N));
  for (int p = 0; p < N; ++p) {
    std::array<double, 3> d1{}, d2{};
    for (int c = 0; c < ncomp; ++c) {
      std::span<const double> f(P[static_cast<size_t>(c)]);
      d1[static_cast<size_t>(c)] = grid.d1(f, p, 0);
      d2[static_cast<size_t>(c)] = grid.d2(f, p, 0);
    }
    if (m.kind == AmbientKind::euclidean_polar) {
      const double speed2 = d1[0] * d1[0] + d1[1] * d1[1];
      kappa[static_cast<size_t>(p)] =
          (d1[0] * d2[1] - d1[1] * d2[0]) / std::pow(speed2, 1.5);
    } else {
      // det[P, P', P''] over |P'|^3; for the hyperboloid the squared speed
      // uses the Minkowski norm.
      const double pt[3] = {P[0][static_cast<size_t>(p)], P[1][static_cast<size_t>(p)],
                            P[2][static_cast<size_t>(p)]};
      const double det = pt[0] * (d1[1] * d2[2] - d1[2] * d2[1]) -
                         pt[1] * (d1[0] * d2[2] - d1[2] * d2[0]) +
                         pt[2] * (d1[0] * d2[1] - d1[1] * d2[0]);
      double speed2 = d1[0] * d1[0] + d1[1] * d1[1] + d1[2] * d1[2];
      if (m.kind == AmbientKind::hyperbolic_polar)
        speed2 = d1[0] * d1[0] + d1[1] * d1[1] - d1[2] * d1[2];
      kappa[static_cast<size_t>(p)] = det / std::pow(speed2, 1.5);
    }
  }
  return kappa;
}

} // namespace curvesolve
