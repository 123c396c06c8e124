#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "curvesolve/ambient.hpp"
#include "curvesolve/errors.hpp"
#include "curvesolve/grid.hpp"
#include "curvesolve/hypersurface.hpp"

namespace curvesolve {

namespace detail {

// Geodesic state: position (x0, ang) and velocity (p0, pang).
struct GeoState {
  double x0;
  std::array<double, 2> ang;
  double p0;
  std::array<double, 2> pang;
};

inline GeoState geodesic_rhs(const AmbientManifold& m, const GeoState& y) {
  const int dim = m.dim_n;
  const auto ch = m.christoffels(y.x0, y.ang);
  const auto sm = m.slice(y.x0, y.ang);
  const double psi0 = m.psi_d0(y.x0, y.ang);
  const auto psig = m.psi_dang(y.x0, y.ang);

  // Full-metric Christoffels from the product symbols plus conformal terms.
  GeoState d{};
  d.x0 = y.p0;
  d.ang = {y.pang[0], y.pang[1]};

  // sigma^{kl} psi_l
  std::array<double, 2> psi_up{0.0, 0.0};
  for (int k = 0; k < dim; ++k)
    for (int l = 0; l < dim; ++l) psi_up[k] += sm.inv(k, l) * psig[l];

  double a0 = psi0 * y.p0 * y.p0; // G^0_00 p0 p0
  for (int i = 0; i < dim; ++i) a0 += 2.0 * psig[i] * y.p0 * y.pang[i];
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      a0 += (ch.g0ij(i, j) - sm.sigma(i, j) * psi0) * y.pang[i] * y.pang[j];
  d.p0 = -a0;

  for (int k = 0; k < dim; ++k) {
    double ak = -psi_up[k] * y.p0 * y.p0;
    for (int i = 0; i < dim; ++i) {
      double gk0i = ch.gk0i(k, i) + (k == i ? psi0 : 0.0);
      ak += 2.0 * gk0i * y.p0 * y.pang[i];
    }
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        double gkij = ch.gkij[k](i, j) + (k == i ? psig[j] : 0.0) + (k == j ? psig[i] : 0.0) -
                      sm.sigma(i, j) * psi_up[k];
        ak += gkij * y.pang[i] * y.pang[j];
      }
    d.pang[k] = -ak;
  }
  return d;
}

inline GeoState rk4_step(const AmbientManifold& m, const GeoState& y, double h) {
  auto add = [](const GeoState& a, const GeoState& b, double s) {
    GeoState r;
    r.x0 = a.x0 + s * b.x0;
    r.ang = {a.ang[0] + s * b.ang[0], a.ang[1] + s * b.ang[1]};
    r.p0 = a.p0 + s * b.p0;
    r.pang = {a.pang[0] + s * b.pang[0], a.pang[1] + s * b.pang[1]};
    return r;
  };
  const GeoState k1 = geodesic_rhs(m, y);
  const GeoState k2 = geodesic_rhs(m, add(y, k1, h / 2.0));
  const GeoState k3 = geodesic_rhs(m, add(y, k2, h / 2.0));
  const GeoState k4 = geodesic_rhs(m, add(y, k3, h));
  GeoState r = y;
  r.x0 += h / 6.0 * (k1.x0 + 2.0 * k2.x0 + 2.0 * k3.x0 + k4.x0);
  for (int c = 0; c < 2; ++c)
    r.ang[c] += h / 6.0 * (k1.ang[c] + 2.0 * k2.ang[c] + 2.0 * k3.ang[c] + k4.ang[c]);
  r.p0 += h / 6.0 * (k1.p0 + 2.0 * k2.p0 + 2.0 * k3.p0 + k4.p0);
  for (int c = 0; c < 2; ++c)
    r.pang[c] += h / 6.0 * (k1.pang[c] + 2.0 * k2.pang[c] + 2.0 * k3.pang[c] + k4.pang[c]);
  return r;
}

// Nonuniform periodic 4-point Lagrange interpolation of (xs, ys) at x.
// xs must be strictly increasing within one period of length 2*pi.
inline double lagrange_periodic(const std::vector<double>& xs, const std::vector<double>& ys,
                                double x) {
  const int n = static_cast<int>(xs.size());
  const double per = 2.0 * M_PI;
  double xx = std::fmod(x - xs[0], per);
  if (xx < 0) xx += per;
  xx += xs[0];
  // find interval via binary search
  int lo = 0, hi = n;
  while (hi - lo > 1) {
    int mid = (lo + hi) / 2;
    (xs[static_cast<size_t>(mid)] <= xx ? lo : hi) = mid;
  }
  std::array<double, 4> px{}, py{};
  for (int s = 0; s < 4; ++s) {
    int idx = lo - 1 + s;
    double shift = 0.0;
    while (idx < 0) { idx += n; shift -= per; }
    while (idx >= n) { idx -= n; shift += per; }
    px[static_cast<size_t>(s)] = xs[static_cast<size_t>(idx)] + shift;
    py[static_cast<size_t>(s)] = ys[static_cast<size_t>(idx)];
  }
  double acc = 0.0;
  for (int s = 0; s < 4; ++s) {
    double w = 1.0;
    for (int r = 0; r < 4; ++r)
      if (r != s) w *= (xx - px[static_cast<size_t>(r)]) /
                       (px[static_cast<size_t>(s)] - px[static_cast<size_t>(r)]);
    acc += w * py[static_cast<size_t>(s)];
  }
  return acc;
}

} // namespace detail

// Embedding of the built-in space forms (used for the independent distance
// verification of the foliation).
inline std::array<double, 4> embed_point(const AmbientManifold& m, double x0,
                                         const std::array<double, 2>& ang) {
  std::array<double, 4> p{};
  const int dim = m.dim_n;
  // unit direction on the base sphere
  std::array<double, 3> dir{};
  if (dim == 1) {
    dir = {std::cos(ang[0]), std::sin(ang[0]), 0.0};
  } else {
    dir = {std::sin(ang[0]) * std::cos(ang[1]), std::sin(ang[0]) * std::sin(ang[1]),
           std::cos(ang[0])};
  }
  switch (m.kind) {
    case AmbientKind::euclidean_polar:
      for (int c = 0; c < 3; ++c) p[static_cast<size_t>(c)] = x0 * dir[static_cast<size_t>(c)];
      break;
    case AmbientKind::sphere_polar:
      for (int c = 0; c < 3; ++c)
        p[static_cast<size_t>(c)] = std::sin(x0) * dir[static_cast<size_t>(c)];
      p[3] = std::cos(x0);
      break;
    case AmbientKind::hyperbolic_polar:
      for (int c = 0; c < 3; ++c)
        p[static_cast<size_t>(c)] = std::sinh(x0) * dir[static_cast<size_t>(c)];
      p[3] = std::cosh(x0);
      break;
    default:
      fail(ErrorKind::unsupported, "embedding: ambient has no built-in embedding");
  }
  return p;
}

inline double ambient_distance(const AmbientManifold& m, const std::array<double, 4>& a,
                               const std::array<double, 4>& b) {
  switch (m.kind) {
    case AmbientKind::euclidean_polar: {
      double s = 0.0;
      for (int c = 0; c < 4; ++c) s += (a[static_cast<size_t>(c)] - b[static_cast<size_t>(c)]) *
                                       (a[static_cast<size_t>(c)] - b[static_cast<size_t>(c)]);
      return std::sqrt(s);
    }
    case AmbientKind::sphere_polar: {
      double d = 0.0;
      for (int c = 0; c < 4; ++c) d += a[static_cast<size_t>(c)] * b[static_cast<size_t>(c)];
      d = std::clamp(d, -1.0, 1.0);
      return std::acos(d);
    }
    case AmbientKind::hyperbolic_polar: {
      double d = a[3] * b[3];
      for (int c = 0; c < 3; ++c) d -= a[static_cast<size_t>(c)] * b[static_cast<size_t>(c)];
      return std::acosh(std::max(1.0, d));
    }
    default:
      fail(ErrorKind::unsupported, "embedding: ambient has no built-in embedding");
  }
}

// Foliation of the inner tubular neighbourhood of the upper barrier by level
// graphs phi(tau, .), tau in [-eps0, 0], phi(0,.) = u2.
struct LevelFoliation {
  const AmbientManifold* ambient = nullptr;
  const Grid* grid = nullptr;
  std::vector<double> u2;
  double eps0 = 0.0;
  int n_levels = 0;
  std::vector<double> taus;               // ascending, taus.back() == 0
  std::vector<std::vector<double>> levels; // nodal graph per tau

  // Integrate the inward normal flow to |tau| and re-express as a graph.
  std::vector<double> phi_at(double tau) const;
};

namespace detail {

struct FlowSample {
  double x0;
  std::array<double, 2> ang;
};

// March every node of graph u2 inward to arclength s >= 0.
inline std::vector<FlowSample> flow_to(const AmbientManifold& m, const Grid& grid,
                                       const GraphState& st, double s, int substeps) {
  const int N = grid.size();
  std::vector<FlowSample> out(static_cast<size_t>(N));
  const double h = -s / substeps; // integrate backwards along +nu
  for (int p = 0; p < N; ++p) {
    GeoState y;
    y.x0 = st.geo.u[static_cast<size_t>(p)];
    y.ang = grid.coords(p);
    y.p0 = st.geo.nu0[static_cast<size_t>(p)];
    y.pang = {st.geo.nu_ang[static_cast<size_t>(p)][0],
              grid.dim_n == 2 ? st.geo.nu_ang[static_cast<size_t>(p)][1] : 0.0};
    for (int k = 0; k < substeps; ++k) {
      y = rk4_step(m, y, h);
      if (!m.in_chart(y.x0))
        fail(ErrorKind::foliation,
             "foliation: normal flow left the chart at node " + std::to_string(p));
    }
    out[static_cast<size_t>(p)] = {y.x0, y.ang};
  }
  return out;
}

// Re-express one level set, given as flowed samples, as a graph over the grid.
inline std::vector<double> level_to_graph(const AmbientManifold& m, const Grid& grid,
                                          const std::vector<FlowSample>& pts, double tau) {
  const int N = grid.size();
  double max_drift = 0.0;
  for (int p = 0; p < N; ++p) {
    const auto x = grid.coords(p);
    max_drift = std::max(max_drift, std::abs(pts[static_cast<size_t>(p)].ang[0] - x[0]));
    if (grid.dim_n == 2)
      max_drift = std::max(max_drift, std::abs(pts[static_cast<size_t>(p)].ang[1] - x[1]));
  }
  std::vector<double> phi(static_cast<size_t>(N));
  if (max_drift < 1e-12) {
    for (int p = 0; p < N; ++p) phi[static_cast<size_t>(p)] = pts[static_cast<size_t>(p)].x0;
    return phi;
  }
  if (grid.dim_n == 1) {
    // Footprints must stay strictly ordered around the circle; a reversal
    // means geodesics crossed before reaching this level.
    std::vector<double> xs(static_cast<size_t>(N)), ys(static_cast<size_t>(N));
    for (int p = 0; p < N; ++p) {
      xs[static_cast<size_t>(p)] = pts[static_cast<size_t>(p)].ang[0];
      ys[static_cast<size_t>(p)] = pts[static_cast<size_t>(p)].x0;
    }
    for (int p = 0; p < N; ++p) {
      const double a = xs[static_cast<size_t>(p)];
      const double b = xs[static_cast<size_t>((p + 1) % N)];
      double gap = b - a;
      if (p + 1 == N) gap += 2.0 * M_PI;
      if (!(gap > 0.0))
        fail(ErrorKind::foliation, "foliation: geodesic footprints crossed at tau=" +
                                       std::to_string(tau) + " (node " + std::to_string(p) + ")");
    }
    for (int p = 0; p < N; ++p)
      phi[static_cast<size_t>(p)] = lagrange_periodic(xs, ys, grid.theta(p));
    return phi;
  }
  // n = 2: local weighted least-squares quadratic fit over the nearest
  // footprints in an equal-area chart around the target node.
  for (int p = 0; p < N; ++p) {
    const auto x = grid.coords(p);
    struct Cand { double d2; int q; };
    std::vector<Cand> cands;
    cands.reserve(static_cast<size_t>(N));
    auto chart = [&](const std::array<double, 2>& a) {
      double dth = a[1] - x[1];
      while (dth > M_PI) dth -= 2.0 * M_PI;
      while (dth < -M_PI) dth += 2.0 * M_PI;
      return std::array<double, 2>{a[0] - x[0], dth * std::sin(x[0])};
    };
    for (int q = 0; q < N; ++q) {
      const auto c = chart(pts[static_cast<size_t>(q)].ang);
      cands.push_back({c[0] * c[0] + c[1] * c[1], q});
    }
    std::nth_element(cands.begin(), cands.begin() + 12, cands.end(),
                     [](const Cand& a, const Cand& b) { return a.d2 < b.d2; });
    cands.resize(12);
    // quadratic model x0 ~ b0 + b1 s + b2 t + b3 s^2 + b4 s t + b5 t^2
    Eigen::MatrixXd A(12, 6);
    Eigen::VectorXd rhs(12);
    for (int r = 0; r < 12; ++r) {
      const auto& cd = cands[static_cast<size_t>(r)];
      const auto c = chart(pts[static_cast<size_t>(cd.q)].ang);
      const double w = 1.0 / (1.0 + cd.d2 * 1e4);
      A(r, 0) = w;
      A(r, 1) = w * c[0];
      A(r, 2) = w * c[1];
      A(r, 3) = w * c[0] * c[0];
      A(r, 4) = w * c[0] * c[1];
      A(r, 5) = w * c[1] * c[1];
      rhs(r) = w * pts[static_cast<size_t>(cd.q)].x0;
    }
    Eigen::VectorXd beta = A.colPivHouseholderQr().solve(rhs);
    phi[static_cast<size_t>(p)] = beta(0);
  }
  return phi;
}

} // namespace detail

inline std::vector<double> LevelFoliation::phi_at(double tau) const {
  if (tau > 0.0 || tau < -eps0)
    fail(ErrorKind::foliation, "foliation: tau outside [-eps0, 0]");
  if (tau == 0.0) return u2;
  const GraphState st = graph_quantities(*ambient, *grid, u2);
  const auto pts = detail::flow_to(*ambient, *grid, st, -tau, 64);
  return detail::level_to_graph(*ambient, *grid, pts, tau);
}

inline LevelFoliation build_foliation(const AmbientManifold& m, const Grid& grid,
                                      std::span<const double> u2, double eps0, int n_levels) {
  if (!(eps0 > 0.0)) fail(ErrorKind::config, "foliation: eps0 must be positive");
  if (n_levels < 3) fail(ErrorKind::config, "foliation: need at least 3 levels");

  LevelFoliation fol;
  fol.ambient = &m;
  fol.grid = &grid;
  fol.u2.assign(u2.begin(), u2.end());
  fol.eps0 = eps0;
  fol.n_levels = n_levels;

  const GraphState st = graph_quantities(m, grid, fol.u2);
  const double dstep = eps0 / (n_levels - 1);
  for (int lev = n_levels - 1; lev >= 0; --lev) {
    const double tau = -dstep * lev;
    fol.taus.push_back(tau);
    if (lev == 0) {
      fol.levels.push_back(fol.u2);
    } else {
      const auto pts = detail::flow_to(m, grid, st, -tau, 64 * lev);
      fol.levels.push_back(detail::level_to_graph(m, grid, pts, tau));
    }
  }

  // phi must increase strictly in tau at every node.
  for (size_t lev = 1; lev < fol.levels.size(); ++lev)
    for (int p = 0; p < grid.size(); ++p)
      if (!(fol.levels[lev][static_cast<size_t>(p)] >
            fol.levels[lev - 1][static_cast<size_t>(p)]))
        fail(ErrorKind::foliation,
             "foliation: level graphs not monotone at tau=" + std::to_string(fol.taus[lev]) +
                 " node " + std::to_string(p));
  return fol;
}

struct FoliationReport {
  double c1 = 0.0;     // lower bi-Lipschitz constant
  double c2 = 0.0;     // upper bi-Lipschitz constant
  double min_phidot = 0.0;
};

inline FoliationReport verify_foliation(const LevelFoliation& fol) {
  FoliationReport rep;
  rep.c1 = std::numeric_limits<double>::infinity();
  rep.c2 = 0.0;
  rep.min_phidot = std::numeric_limits<double>::infinity();
  const int N = fol.grid->size();
  const int L = static_cast<int>(fol.levels.size());
  for (int a = 0; a < L; ++a)
    for (int b = a + 1; b < L; ++b) {
      const double dtau = std::abs(fol.taus[static_cast<size_t>(b)] - fol.taus[static_cast<size_t>(a)]);
      for (int p = 0; p < N; ++p) {
        const double dphi = std::abs(fol.levels[static_cast<size_t>(b)][static_cast<size_t>(p)] -
                                     fol.levels[static_cast<size_t>(a)][static_cast<size_t>(p)]);
        rep.c1 = std::min(rep.c1, dphi / dtau);
        rep.c2 = std::max(rep.c2, dphi / dtau);
      }
    }
  for (int a = 0; a + 1 < L; ++a) {
    const double dtau = fol.taus[static_cast<size_t>(a + 1)] - fol.taus[static_cast<size_t>(a)];
    for (int p = 0; p < N; ++p) {
      const double pd = (fol.levels[static_cast<size_t>(a + 1)][static_cast<size_t>(p)] -
                         fol.levels[static_cast<size_t>(a)][static_cast<size_t>(p)]) /
                        dtau;
      rep.min_phidot = std::min(rep.min_phidot, pd);
    }
  }
  if (!(rep.min_phidot > 0.0))
    fail(ErrorKind::foliation, "foliation: phi is not strictly monotone in tau");
  return rep;
}

// Signed distance from an ambient point to the barrier graph, by minimisation
// over barrier nodes with quadratic refinement (n=1). Negative inside.
inline double signed_distance_to_graph(const AmbientManifold& m, const Grid& grid,
                                       std::span<const double> u2, double x0,
                                       const std::array<double, 2>& ang) {
  const auto P = embed_point(m, x0, ang);
  const int N = grid.size();
  int best = 0;
  double bestd = std::numeric_limits<double>::infinity();
  for (int q = 0; q < N; ++q) {
    const double d = ambient_distance(m, P, embed_point(m, u2[static_cast<size_t>(q)], grid.coords(q)));
    if (d < bestd) { bestd = d; best = q; }
  }
  double dist = bestd;
  if (grid.dim_n == 1) {
    // parabolic refinement in the barrier parameter around the best node
    auto dist_at = [&](double th) {
      std::vector<double> xs(static_cast<size_t>(N)), ys(static_cast<size_t>(N));
      for (int q = 0; q < N; ++q) { xs[static_cast<size_t>(q)] = grid.theta(q); ys[static_cast<size_t>(q)] = u2[static_cast<size_t>(q)]; }
      const double uq = detail::lagrange_periodic(xs, ys, th);
      return ambient_distance(m, P, embed_point(m, uq, {th, 0.0}));
    };
    const double h = grid.h_theta;
    const double th0 = grid.theta(best);
    double d0 = dist_at(th0 - h), d1 = dist_at(th0), d2 = dist_at(th0 + h);
    const double denom = d0 - 2.0 * d1 + d2;
    if (std::abs(denom) > 1e-300) {
      const double off = 0.5 * (d0 - d2) / denom * h;
      dist = dist_at(th0 + std::clamp(off, -h, h));
    }
    // golden-section polish on the refined bracket
    double lo = th0 - h, hi = th0 + h;
    for (int it = 0; it < 60; ++it) {
      const double m1 = lo + 0.381966 * (hi - lo);
      const double m2 = hi - 0.381966 * (hi - lo);
      if (dist_at(m1) < dist_at(m2)) hi = m2;
      else lo = m1;
    }
    dist = std::min(dist, dist_at(0.5 * (lo + hi)));
  }
  // sign: inside means below the barrier graph at the same base point
  std::vector<double> xs(static_cast<size_t>(N)), ys(static_cast<size_t>(N));
  double u2_here;
  if (grid.dim_n == 1) {
    for (int q = 0; q < N; ++q) { xs[static_cast<size_t>(q)] = grid.theta(q); ys[static_cast<size_t>(q)] = u2[static_cast<size_t>(q)]; }
    u2_here = detail::lagrange_periodic(xs, ys, ang[0]);
  } else {
    u2_here = u2[static_cast<size_t>(best)];
  }
  return x0 < u2_here ? -dist : dist;
}

} // namespace curvesolve
