#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "curvesolve/errors.hpp"
#include "curvesolve/expr.hpp"
#include "curvesolve/grid.hpp"
#include "curvesolve/hypersurface.hpp"

namespace curvesolve {

namespace detail {

// C^2 monotone ramp used by the clamp bands: R(0)=0, R(1)=1, R'(0)=R'(1)=0,
// R''(0)=R''(1)=0, and the mean slope over [0,1] is one.
template <class T>
T clamp_ramp(T x) {
  return x * x * x * (6.0 + x * (-8.0 + 3.0 * x));
}

// Smooth monotone cutoff: constant c1/2 below c1/2, identity on [c1, c2/2],
// constant c2 above c2, with C^2 blends between the bands.
template <class T>
T theta_clamp(T t, double c1, double c2) {
  if (t <= c1 / 2.0) return T(c1 / 2.0);
  if (t < c1) {
    const T x = (t - c1 / 2.0) / (c1 / 2.0);
    return c1 / 2.0 + (c1 / 2.0) * clamp_ramp(x);
  }
  if (t <= c2 / 2.0) return t;
  if (t < c2) {
    const T x = (c2 - t) / (c2 / 2.0);
    return c2 - (c2 / 2.0) * clamp_ramp(x);
  }
  return T(c2);
}

} // namespace detail

// Prescribed right-hand side f(x0, x, nu) > 0 with bounds 0 < c1 <= f <= c2.
// Expression variables: x0, the angular coordinates (theta; or phi, theta),
// and the unit-normal components nu0, nu1 (, nu2).
struct RightHandSide {
  ExprRef f;
  double c1 = 0.0;
  double c2 = 0.0;
  bool clamped = false;
  int dim = 1;

  static std::vector<std::string> variable_names(int dim) {
    if (dim == 1) return {"x0", "theta", "nu0", "nu1"};
    return {"x0", "phi", "theta", "nu0", "nu1", "nu2"};
  }

  static RightHandSide parse(const std::string& text, int dim, double c1, double c2,
                             bool clamped = false) {
    if (!(c1 > 0.0) || !(c1 < c2))
      fail(ErrorKind::config, "rhs: bounds must satisfy 0 < c1 < c2");
    RightHandSide r;
    r.f = ExprRef::parse(text, variable_names(dim));
    r.dim = dim;
    r.c1 = c1;
    r.c2 = c2;
    r.clamped = clamped;
    return r;
  }

  template <class T>
  T eval(T x0, const std::array<double, 2>& ang, T nu0, const TinyVec<T>& nu_ang) const {
    std::array<T, 6> slots;
    int s = 0;
    slots[s++] = x0;
    slots[s++] = T(ang[0]);
    if (dim == 2) slots[s++] = T(ang[1]);
    slots[s++] = nu0;
    slots[s++] = nu_ang[0];
    if (dim == 2) slots[s++] = nu_ang[1];
    T v = f.eval(std::span<const T>(slots.data(), static_cast<size_t>(s)));
    if (clamped) v = detail::theta_clamp(v, c1, c2);
    return v;
  }

  double eval_on_state(const GraphState& st, const Grid& grid, int node) const {
    return eval<double>(st.geo.u[static_cast<size_t>(node)], grid.coords(node),
                        st.geo.nu0[static_cast<size_t>(node)],
                        st.geo.nu_ang[static_cast<size_t>(node)]);
  }
};

// Returns the composition with the cutoff; values already in [c1, c2/2] are
// untouched.
inline RightHandSide clamp_rhs(const RightHandSide& rhs, double c1, double c2) {
  if (!(c1 > 0.0) || !(c1 < c2))
    fail(ErrorKind::config, "rhs: clamp bounds must satisfy 0 < c1 < c2");
  RightHandSide out = rhs;
  out.c1 = c1;
  out.c2 = c2;
  out.clamped = true;
  return out;
}

// Sampled bound check over random smooth graphs between the barriers.
inline bool check_rhs_bounds(const RightHandSide& rhs, const AmbientManifold& m,
                             const Grid& grid, std::span<const double> u1,
                             std::span<const double> u2, int samples = 8) {
  const int N = grid.size();
  for (int s = 0; s < samples; ++s) {
    const double frac = (s + 1.0) / (samples + 1.0);
    std::vector<double> u(static_cast<size_t>(N));
    for (int p = 0; p < N; ++p)
      u[static_cast<size_t>(p)] =
          u1[static_cast<size_t>(p)] + frac * (u2[static_cast<size_t>(p)] - u1[static_cast<size_t>(p)]);
    const GraphState st = graph_quantities(m, grid, u);
    for (int p = 0; p < N; ++p) {
      const double v = rhs.eval_on_state(st, grid, p);
      if (!(v >= rhs.c1 - 1e-12 && v <= rhs.c2 + 1e-12)) return false;
    }
  }
  return true;
}

} // namespace curvesolve
