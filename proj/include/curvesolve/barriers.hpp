#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "curvesolve/ambient.hpp"
#include "curvesolve/curvature.hpp"
#include "curvesolve/errors.hpp"
#include "curvesolve/grid.hpp"
#include "curvesolve/hypersurface.hpp"
#include "curvesolve/rhs.hpp"

namespace curvesolve {

struct BarrierPair {
  std::vector<double> u1;
  std::vector<double> u2;
  double epsilon1 = 0.0;
};

struct BarrierReport {
  bool ok = true;
  double upper_margin = 0.0;  // min over nodes of F - f on the upper barrier
  double lower_margin = 0.0;  // min over admissible nodes of (f - eps1) - F on the lower one
  int upper_worst_node = -1;
  int lower_worst_node = -1;
  int sigma_size = 0;         // admissible nodes on the lower barrier
  int n_nodes = 0;
};

// Checks the standing structural conditions before any solve:
//   u1 < u2 nodally, F > f on the upper barrier, F <= f - eps1 on the
//   admissible part of the lower barrier. Inequalities carry a configurable
//   absolute slack since the discrete values blur strictness.
inline BarrierReport validate_barriers(const BarrierPair& pair, const AmbientManifold& m,
                                       const Grid& grid, const CurvatureFunction& F,
                                       const RightHandSide& rhs, double slack = 1e-8) {
  const int N = grid.size();
  if (static_cast<int>(pair.u1.size()) != N || static_cast<int>(pair.u2.size()) != N)
    fail(ErrorKind::config, "barriers: barrier vectors do not match the grid");
  if (!(pair.epsilon1 > 0.0)) fail(ErrorKind::config, "barriers: epsilon1 must be positive");

  for (int p = 0; p < N; ++p)
    if (!(pair.u1[static_cast<size_t>(p)] < pair.u2[static_cast<size_t>(p)]))
      fail(ErrorKind::barrier, "barriers: ordering violated at node " + std::to_string(p) +
                                   " (u1=" + std::to_string(pair.u1[static_cast<size_t>(p)]) +
                                   " >= u2=" + std::to_string(pair.u2[static_cast<size_t>(p)]) + ")");

  BarrierReport rep;
  rep.n_nodes = N;

  // Upper barrier: every node must be admissible and satisfy F > f.
  {
    const GraphState st = graph_quantities(m, grid, pair.u2);
    rep.upper_margin = std::numeric_limits<double>::infinity();
    for (int p = 0; p < N; ++p) {
      std::array<double, 2> kv{st.kappa[static_cast<size_t>(p)][0],
                               grid.dim_n == 2 ? st.kappa[static_cast<size_t>(p)][1] : 0.0};
      std::span<const double> ks(kv.data(), static_cast<size_t>(grid.dim_n));
      if (!F.in_cone(ks))
        fail(ErrorKind::barrier,
             "barriers: upper barrier inadmissible at node " + std::to_string(p));
      const double Fv = F.value(ks);
      const double fv = rhs.eval_on_state(st, grid, p);
      const double margin = Fv - fv;
      if (margin < rep.upper_margin) {
        rep.upper_margin = margin;
        rep.upper_worst_node = p;
      }
    }
    if (!(rep.upper_margin > slack))
      fail(ErrorKind::barrier,
           "barriers: upper barrier fails F > f; worst node " +
               std::to_string(rep.upper_worst_node) + " margin " +
               std::to_string(rep.upper_margin));
  }

  // Lower barrier: inadmissible nodes are excluded from the check.
  {
    const GraphState st = graph_quantities(m, grid, pair.u1);
    rep.lower_margin = std::numeric_limits<double>::infinity();
    for (int p = 0; p < N; ++p) {
      std::array<double, 2> kv{st.kappa[static_cast<size_t>(p)][0],
                               grid.dim_n == 2 ? st.kappa[static_cast<size_t>(p)][1] : 0.0};
      std::span<const double> ks(kv.data(), static_cast<size_t>(grid.dim_n));
      if (!F.in_cone(ks)) continue;
      ++rep.sigma_size;
      const double Fv = F.value(ks);
      const double fv = rhs.eval_on_state(st, grid, p);
      const double margin = (fv - pair.epsilon1) - Fv;
      if (margin < rep.lower_margin) {
        rep.lower_margin = margin;
        rep.lower_worst_node = p;
      }
    }
    if (rep.sigma_size == 0) rep.lower_margin = std::numeric_limits<double>::infinity();
    if (rep.lower_margin < -slack)
      fail(ErrorKind::barrier,
           "barriers: lower barrier fails F <= f - eps1; worst node " +
               std::to_string(rep.lower_worst_node) + " margin " +
               std::to_string(rep.lower_margin));
  }
  return rep;
}

} // namespace curvesolve
