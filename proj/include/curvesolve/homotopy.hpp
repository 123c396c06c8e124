#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "curvesolve/ambient.hpp"
#include "curvesolve/barriers.hpp"
#include "curvesolve/checksum.hpp"
#include "curvesolve/curvature.hpp"
#include "curvesolve/dual.hpp"
#include "curvesolve/errors.hpp"
#include "curvesolve/grid.hpp"
#include "curvesolve/hypersurface.hpp"
#include "curvesolve/rhs.hpp"
#include "curvesolve/tubular.hpp"

namespace curvesolve {

// A priori bounds enforced after every accepted continuation step.
struct Monitors {
  double grad_cap = 0.0;
  double kappa_cap = 0.0;
};

inline Monitors make_monitors(const AmbientManifold& m, const Grid& grid,
                              const BarrierPair& barriers,
                              std::optional<double> grad_override = std::nullopt,
                              std::optional<double> kappa_override = std::nullopt) {
  Monitors mon;
  double maxgd = 0.0, maxkap = 0.0;
  for (const auto* u : {&barriers.u1, &barriers.u2}) {
    const GraphState st = graph_quantities(m, grid, *u);
    for (int p = 0; p < grid.size(); ++p) {
      maxgd = std::max(maxgd, st.geo.graddsq[static_cast<size_t>(p)]);
      for (int c = 0; c < grid.dim_n; ++c)
        maxkap = std::max(maxkap, std::abs(st.kappa[static_cast<size_t>(p)][c]));
    }
  }
  mon.grad_cap = 4.0 * (maxgd + 1.0);
  mon.kappa_cap = maxkap > 0.0 ? 10.0 * maxkap : std::numeric_limits<double>::infinity();
  if (grad_override) mon.grad_cap = *grad_override;
  if (kappa_override) mon.kappa_cap = *kappa_override;
  return mon;
}

struct TraceStep {
  double t = 0.0;
  double dt = 0.0;
  int iters = 0;
  double residual = 0.0;
  double min_barrier_gap = 0.0;
  double max_graddsq = 0.0;
  double max_kappa = 0.0;
  uint64_t u_checksum = 0;
  bool arclength = false;
};

struct ContinuationTrace {
  std::vector<TraceStep> steps;
  double quad_tail_C = 0.0;      // max r_{k+1} / r_k^2 over logged Newton tails
  double max_c2_monitor = -std::numeric_limits<double>::infinity();
  bool c2_monitor_defined = false;
  bool used_arclength = false;
};

struct PathSchedule {
  double dt0 = 0.1;
  double dt_min = 1e-4;
  double dt_max = 0.5;
  double grow = 1.5;
  double tol = 1e-10;
  int max_steps = 500;
  double overshoot = 1e-3;
  int newton_max_iter = 50;
  int newton_max_halvings = 30;
  double c2_lambda = 1.0;
  double c2_mu = 1.0;
};

// The homotopy problem: residual G(u; t) = F(kappa(u)) - (t f + (1-t) f0)
// with the penalized particular right-hand side
//   f0(x^0, x) = F_base(x) + lambda (phi_tau0(x) - x^0).
struct HomotopyProblem {
  AmbientManifold ambient;
  Grid grid;
  CurvatureFunction F;
  RightHandSide rhs;
  BarrierPair barriers;
  Monitors monitors;
  double lambda = 0.0;
  double tau0 = 0.0;
  std::vector<double> u0;       // phi(tau0, .)
  std::vector<double> phi_tau0; // same nodal values, kept under the role name
  std::vector<double> f0_base;  // F evaluated on the tau0 level graph

  template <class T>
  std::vector<T> residual_impl(std::span<const T> u, double t) const {
    const NodalGeometry<T> geo = compute_geometry<T>(ambient, grid, u);
    const int N = grid.size();
    std::vector<T> G(static_cast<size_t>(N));
    std::vector<int> bad;
    for (int p = 0; p < N; ++p) {
      bool adm = true;
      const T Fv = pencil_value(F, geo.h[static_cast<size_t>(p)], geo.g[static_cast<size_t>(p)], &adm);
      if (!adm) {
        bad.push_back(p);
        continue;
      }
      const T fv = rhs.eval(u[static_cast<size_t>(p)], grid.coords(p),
                            geo.nu0[static_cast<size_t>(p)], geo.nu_ang[static_cast<size_t>(p)]);
      const T f0 = T(f0_base[static_cast<size_t>(p)]) +
                   lambda * (T(phi_tau0[static_cast<size_t>(p)]) - u[static_cast<size_t>(p)]);
      G[static_cast<size_t>(p)] = Fv - (t * fv + (1.0 - t) * f0);
    }
    if (!bad.empty()) {
      std::string msg = "residual: principal curvatures left the cone at nodes";
      for (size_t i = 0; i < bad.size() && i < 8; ++i) msg += " " + std::to_string(bad[i]);
      if (bad.size() > 8) msg += " ... (" + std::to_string(bad.size()) + " total)";
      fail(ErrorKind::cone, msg);
    }
    return G;
  }

  std::vector<double> residual(std::span<const double> u, double t) const {
    return residual_impl<double>(u, t);
  }

  // dG/dt is affine: G_t = f0 - f evaluated at u.
  std::vector<double> residual_dt(std::span<const double> u) const {
    const NodalGeometry<double> geo = compute_geometry<double>(ambient, grid, u);
    const int N = grid.size();
    std::vector<double> Gt(static_cast<size_t>(N));
    for (int p = 0; p < N; ++p) {
      const double fv = rhs.eval(u[static_cast<size_t>(p)], grid.coords(p),
                                 geo.nu0[static_cast<size_t>(p)], geo.nu_ang[static_cast<size_t>(p)]);
      const double f0 = f0_base[static_cast<size_t>(p)] +
                        lambda * (phi_tau0[static_cast<size_t>(p)] - u[static_cast<size_t>(p)]);
      Gt[static_cast<size_t>(p)] = f0 - fv;
    }
    return Gt;
  }

  // --- Jacobian assembly: exact tangent propagation, one pass per color ---

  const std::vector<std::vector<int>>& rows_affected() const {
    if (rows_affected_.empty()) {
      const int N = grid.size();
      rows_affected_.assign(static_cast<size_t>(N), {});
      for (int i = 0; i < N; ++i)
        for (int j : grid.ball4(i)) rows_affected_[static_cast<size_t>(j)].push_back(i);
    }
    return rows_affected_;
  }

  const std::vector<std::vector<int>>& color_groups() const {
    if (color_groups_.empty()) {
      const auto& rows = rows_affected();
      const int N = grid.size();
      std::vector<std::vector<char>> covered; // per color, rows already written
      std::vector<int> color_of(static_cast<size_t>(N), -1);
      for (int j = 0; j < N; ++j) {
        int c = 0;
        for (;; ++c) {
          if (c == static_cast<int>(covered.size())) {
            covered.emplace_back(static_cast<size_t>(N), 0);
            color_groups_.emplace_back();
          }
          bool free_slot = true;
          for (int i : rows[static_cast<size_t>(j)])
            if (covered[static_cast<size_t>(c)][static_cast<size_t>(i)]) {
              free_slot = false;
              break;
            }
          if (free_slot) break;
        }
        color_of[static_cast<size_t>(j)] = c;
        color_groups_[static_cast<size_t>(c)].push_back(j);
        for (int i : rows[static_cast<size_t>(j)])
          covered[static_cast<size_t>(c)][static_cast<size_t>(i)] = 1;
      }
    }
    return color_groups_;
  }

  struct Linearization {
    Eigen::SparseMatrix<double> J;
    std::vector<TinyMat<double>> a_coeff; // per-node dF/dh_ij
    double min_aij_eig = 0.0;
  };

  Linearization linearize(std::span<const double> u, double t) const {
    const int N = grid.size();
    Linearization lin;
    lin.a_coeff.assign(static_cast<size_t>(N), TinyMat<double>(grid.dim_n));
    lin.min_aij_eig = std::numeric_limits<double>::infinity();

    // Second-order coefficients and ellipticity from the value pass.
    {
      const NodalGeometry<double> geo = compute_geometry<double>(ambient, grid, u);
      for (int p = 0; p < N; ++p) {
        const PencilValue pv =
            eval_pencil(F, geo.h[static_cast<size_t>(p)], geo.g[static_cast<size_t>(p)]);
        if (!pv.admissible)
          fail(ErrorKind::cone, "linearize: inadmissible node " + std::to_string(p));
        lin.a_coeff[static_cast<size_t>(p)] = pv.dF_dh;
        lin.min_aij_eig = std::min(lin.min_aij_eig, sym_min_eig(pv.dF_dh));
      }
      if (!(lin.min_aij_eig > 0.0))
        fail(ErrorKind::ellipticity,
             "linearize: second-order coefficients lost positive definiteness");
    }

    const auto& rows = rows_affected();
    const auto& groups = color_groups();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(N) * 16);
    std::vector<Dual> ud(static_cast<size_t>(N));
    for (const auto& group : groups) {
      for (int p = 0; p < N; ++p) ud[static_cast<size_t>(p)] = Dual(u[static_cast<size_t>(p)], 0.0);
      for (int j : group) ud[static_cast<size_t>(j)].d = 1.0;
      const std::vector<Dual> G = residual_impl<Dual>(ud, t);
      for (int j : group)
        for (int i : rows[static_cast<size_t>(j)])
          trips.emplace_back(i, j, G[static_cast<size_t>(i)].d);
    }
    lin.J.resize(N, N);
    lin.J.setFromTriplets(trips.begin(), trips.end());
    return lin;
  }

private:
  mutable std::vector<std::vector<int>> rows_affected_;
  mutable std::vector<std::vector<int>> color_groups_;
};

// --- particular solution -----------------------------------------------------

// Chooses tau0 < 0 (largest magnitude in a halving trial sequence, unless
// pinned) so that the penalized bracket holds nodally:
//   F_tau/2  <=  F_tau + lambda (phi(tau) - u2)  <=  F_u2,
// then freezes u0 = phi(tau0) and f0_base = F(kappa(u0)).
inline void resolve_particular(HomotopyProblem& prob, const LevelFoliation& fol,
                               std::optional<double> pinned_tau0 = std::nullopt) {
  const Grid& grid = prob.grid;
  const int N = grid.size();

  const GraphState st2 = graph_quantities(prob.ambient, grid, prob.barriers.u2);
  std::vector<double> F_u2(static_cast<size_t>(N));
  for (int p = 0; p < N; ++p)
    F_u2[static_cast<size_t>(p)] =
        pencil_value(prob.F, st2.geo.h[static_cast<size_t>(p)], st2.geo.g[static_cast<size_t>(p)]);

  std::vector<double> trials;
  if (pinned_tau0) {
    trials.push_back(*pinned_tau0);
  } else {
    double tau = -0.98 * fol.eps0;
    for (int j = 0; j <= 60; ++j) {
      trials.push_back(tau);
      tau *= 0.5;
    }
  }

  for (double tau : trials) {
    if (!(tau < 0.0 && tau > -fol.eps0)) continue;
    std::vector<double> phi;
    try {
      phi = fol.phi_at(tau);
    } catch (const SolverError&) {
      continue;
    }
    bool ok = true;
    for (int p = 0; p < N && ok; ++p)
      ok = prob.barriers.u1[static_cast<size_t>(p)] < phi[static_cast<size_t>(p)] &&
           phi[static_cast<size_t>(p)] < prob.barriers.u2[static_cast<size_t>(p)];
    if (!ok) continue;

    std::vector<double> Ftau(static_cast<size_t>(N));
    try {
      const GraphState st = graph_quantities(prob.ambient, grid, phi);
      for (int p = 0; p < N; ++p)
        Ftau[static_cast<size_t>(p)] = pencil_value(prob.F, st.geo.h[static_cast<size_t>(p)],
                                                    st.geo.g[static_cast<size_t>(p)]);
    } catch (const SolverError&) {
      continue;
    }
    for (int p = 0; p < N && ok; ++p) {
      const double mid = Ftau[static_cast<size_t>(p)] +
                         prob.lambda * (phi[static_cast<size_t>(p)] -
                                        prob.barriers.u2[static_cast<size_t>(p)]);
      ok = 0.5 * Ftau[static_cast<size_t>(p)] <= mid && mid <= F_u2[static_cast<size_t>(p)];
    }
    if (!ok) continue;

    prob.tau0 = tau;
    prob.u0 = phi;
    prob.phi_tau0 = phi;
    prob.f0_base = Ftau;
    return;
  }
  fail(ErrorKind::particular,
       "particular: no tau0 in (-eps0, 0) satisfies the penalty bracket for lambda=" +
           std::to_string(prob.lambda) + " (lambda too large for eps0)");
}

// Nodal check of the penalty bracket at a given tau (test utility).
inline bool particular_bracket_holds(const HomotopyProblem& prob, const LevelFoliation& fol,
                                     double tau) {
  const int N = prob.grid.size();
  const auto phi = fol.phi_at(tau);
  const GraphState st = graph_quantities(prob.ambient, prob.grid, phi);
  const GraphState st2 = graph_quantities(prob.ambient, prob.grid, prob.barriers.u2);
  for (int p = 0; p < N; ++p) {
    const double Ft = pencil_value(prob.F, st.geo.h[static_cast<size_t>(p)],
                                   st.geo.g[static_cast<size_t>(p)]);
    const double F2 = pencil_value(prob.F, st2.geo.h[static_cast<size_t>(p)],
                                   st2.geo.g[static_cast<size_t>(p)]);
    const double mid =
        Ft + prob.lambda * (phi[static_cast<size_t>(p)] - prob.barriers.u2[static_cast<size_t>(p)]);
    if (!(0.5 * Ft <= mid && mid <= F2)) return false;
  }
  return true;
}

// --- Newton ------------------------------------------------------------------

struct NewtonResult {
  Eigen::VectorXd u;
  int iters = 0;
  std::vector<double> res_history;
  bool converged = false;
};

inline double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Damped Newton with backtracking on the residual sup-norm. Steps whose
// candidate leaves the cone or the chart are rejected by halving.
inline NewtonResult newton_solve(const HomotopyProblem& prob, std::span<const double> u_init,
                                 double t, double tol, const PathSchedule& sched = {}) {
  const int N = prob.grid.size();
  NewtonResult res;
  std::vector<double> u(u_init.begin(), u_init.end());

  std::vector<double> G = prob.residual(u, t); // throws if u_init inadmissible
  double gnorm = inf_norm(G);
  res.res_history.push_back(gnorm);

  for (int it = 0; it < sched.newton_max_iter; ++it) {
    if (gnorm <= tol) {
      res.converged = true;
      break;
    }
    const auto lin = prob.linearize(u, t);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(lin.J);
    if (lu.info() != Eigen::Success)
      fail(ErrorKind::nonconvergence, "newton: Jacobian factorization failed");
    Eigen::Map<const Eigen::VectorXd> Gv(G.data(), N);
    const Eigen::VectorXd step = lu.solve(-Gv);

    double alpha = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= sched.newton_max_halvings; ++halving) {
      std::vector<double> u_try(static_cast<size_t>(N));
      for (int p = 0; p < N; ++p)
        u_try[static_cast<size_t>(p)] = u[static_cast<size_t>(p)] + alpha * step(p);
      try {
        std::vector<double> G_try = prob.residual(u_try, t);
        const double gn = inf_norm(G_try);
        if (gn < gnorm) {
          u = std::move(u_try);
          G = std::move(G_try);
          gnorm = gn;
          accepted = true;
          break;
        }
      } catch (const SolverError& e) {
        if (e.kind() != ErrorKind::cone && e.kind() != ErrorKind::domain &&
            e.kind() != ErrorKind::metric)
          throw;
      }
      alpha *= 0.5;
    }
    if (!accepted)
      fail(ErrorKind::nonconvergence, "newton: damping exhausted at t=" + std::to_string(t));
    res.iters = it + 1;
    res.res_history.push_back(gnorm);
  }
  if (!res.converged && gnorm <= tol) res.converged = true;
  if (!res.converged)
    fail(ErrorKind::nonconvergence,
         "newton: no convergence after " + std::to_string(sched.newton_max_iter) +
             " iterations at t=" + std::to_string(t));
  res.u = Eigen::Map<const Eigen::VectorXd>(u.data(), N);
  return res;
}

// --- continuation ------------------------------------------------------------

struct PathState {
  std::vector<double> u;
  double t = 0.0;
  double dt = 0.0;
  int consecutive_successes = 0;
  bool arclength = false;
  double ds = 0.0;
  double max_t_reached = 0.0;
  std::vector<double> u_prev; // previous accepted point (tangent source)
  double t_prev = 0.0;
  bool has_prev = false;
  ContinuationTrace trace;
};

namespace detail {

struct StepQuality {
  double min_barrier_gap;
  double max_graddsq;
  double max_kappa;
  double c2_w = 0.0;
  bool c2_defined = false;
};

inline StepQuality measure_step(const HomotopyProblem& prob, std::span<const double> u,
                                const PathSchedule& sched) {
  const GraphState st = graph_quantities(prob.ambient, prob.grid, u);
  StepQuality q{std::numeric_limits<double>::infinity(), 0.0,
                -std::numeric_limits<double>::infinity()};
  const int N = prob.grid.size();
  bool c2_ok = prob.ambient.chi_supported();
  double wmax = -std::numeric_limits<double>::infinity();
  for (int p = 0; p < N; ++p) {
    q.min_barrier_gap = std::min(
        q.min_barrier_gap,
        std::min(u[static_cast<size_t>(p)] - prob.barriers.u1[static_cast<size_t>(p)],
                 prob.barriers.u2[static_cast<size_t>(p)] - u[static_cast<size_t>(p)]));
    q.max_graddsq = std::max(q.max_graddsq, st.geo.graddsq[static_cast<size_t>(p)]);
    const double kmax = st.kappa[static_cast<size_t>(p)][prob.grid.dim_n - 1];
    for (int c = 0; c < prob.grid.dim_n; ++c)
      q.max_kappa = std::max(q.max_kappa, st.kappa[static_cast<size_t>(p)][c]);
    if (c2_ok && kmax > 0.0) {
      const double w = std::log(kmax) + sched.c2_lambda * std::log(st.geo.v[static_cast<size_t>(p)]) +
                       sched.c2_mu * prob.ambient.chi(u[static_cast<size_t>(p)]);
      wmax = std::max(wmax, w);
    } else {
      c2_ok = false;
    }
  }
  q.c2_defined = c2_ok;
  q.c2_w = wmax;
  return q;
}

inline void enforce_monitors(const HomotopyProblem& prob, const StepQuality& q, double t) {
  if (!(q.min_barrier_gap > 0.0))
    fail(ErrorKind::monitor, "monitor: barrier sandwich violated at t=" + std::to_string(t) +
                                 " (gap " + std::to_string(q.min_barrier_gap) + ")");
  if (!(q.max_graddsq < prob.monitors.grad_cap))
    fail(ErrorKind::monitor, "monitor: gradient bound violated at t=" + std::to_string(t) +
                                 " (|Du|^2 " + std::to_string(q.max_graddsq) + " >= cap " +
                                 std::to_string(prob.monitors.grad_cap) + ")");
  if (!(q.max_kappa < prob.monitors.kappa_cap))
    fail(ErrorKind::monitor, "monitor: curvature bound violated at t=" + std::to_string(t) +
                                 " (kappa " + std::to_string(q.max_kappa) + " >= cap " +
                                 std::to_string(prob.monitors.kappa_cap) + ")");
}

inline void update_tail_constant(ContinuationTrace& trace, const std::vector<double>& hist) {
  const size_t m = hist.size();
  if (m < 3) return;
  for (size_t k = m - 3; k + 1 < m; ++k) {
    const double rk = hist[k], rk1 = hist[k + 1];
    if (rk > 1e-13 && rk1 > 1e-14)
      trace.quad_tail_C = std::max(trace.quad_tail_C, rk1 / (rk * rk));
  }
}

inline void record_step(const HomotopyProblem& prob, PathState& ps, double t, double dt,
                        const NewtonResult& nr, const StepQuality& q, bool arclength) {
  TraceStep s;
  s.t = t;
  s.dt = dt;
  s.iters = nr.iters;
  s.residual = nr.res_history.empty() ? 0.0 : nr.res_history.back();
  s.min_barrier_gap = q.min_barrier_gap;
  s.max_graddsq = q.max_graddsq;
  s.max_kappa = q.max_kappa;
  s.u_checksum = fnv1a64(std::span<const double>(ps.u));
  s.arclength = arclength;
  ps.trace.steps.push_back(s);
  if (q.c2_defined) {
    ps.trace.c2_monitor_defined = true;
    ps.trace.max_c2_monitor = std::max(ps.trace.max_c2_monitor, q.c2_w);
  }
  update_tail_constant(ps.trace, nr.res_history);
}

// One pseudo-arclength corrector: solve the bordered system for (u, t) with
// the linearized constraint xi_u . (u - u_base) + xi_t (t - t_base) = ds.
struct ArcResult {
  std::vector<double> u;
  double t = 0.0;
  int iters = 0;
  std::vector<double> res_history;
};

inline ArcResult arclength_correct(const HomotopyProblem& prob, const std::vector<double>& u_base,
                                   double t_base, const std::vector<double>& xi_u, double xi_t,
                                   double ds, const PathSchedule& sched) {
  const int N = prob.grid.size();
  std::vector<double> u(u_base);
  double t = t_base;
  for (int p = 0; p < N; ++p) u[static_cast<size_t>(p)] += ds * xi_u[static_cast<size_t>(p)];
  t += ds * xi_t;

  ArcResult out;
  auto full_res = [&](const std::vector<double>& w, double s, std::vector<double>& G) {
    G = prob.residual(w, s);
    double constraint = xi_t * (s - t_base) - ds;
    for (int p = 0; p < N; ++p)
      constraint += xi_u[static_cast<size_t>(p)] *
                    (w[static_cast<size_t>(p)] - u_base[static_cast<size_t>(p)]);
    G.push_back(constraint);
    return inf_norm(G);
  };

  std::vector<double> G;
  double gnorm = full_res(u, t, G);
  out.res_history.push_back(gnorm);
  for (int it = 0; it < sched.newton_max_iter; ++it) {
    if (gnorm <= sched.tol) {
      out.u = u;
      out.t = t;
      out.iters = it;
      return out;
    }
    const auto lin = prob.linearize(u, t);
    const std::vector<double> Gt = prob.residual_dt(u);
    Eigen::SparseMatrix<double> B(N + 1, N + 1);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(lin.J.nonZeros()) + 2 * static_cast<size_t>(N) + 1);
    for (int kcol = 0; kcol < lin.J.outerSize(); ++kcol)
      for (Eigen::SparseMatrix<double>::InnerIterator jt(lin.J, kcol); jt; ++jt)
        trips.emplace_back(static_cast<int>(jt.row()), static_cast<int>(jt.col()), jt.value());
    for (int p = 0; p < N; ++p) {
      trips.emplace_back(p, N, Gt[static_cast<size_t>(p)]);
      trips.emplace_back(N, p, xi_u[static_cast<size_t>(p)]);
    }
    trips.emplace_back(N, N, xi_t);
    B.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(B);
    if (lu.info() != Eigen::Success)
      fail(ErrorKind::nonconvergence, "arclength: bordered factorization failed");
    Eigen::Map<const Eigen::VectorXd> Gv(G.data(), N + 1);
    const Eigen::VectorXd step = lu.solve(-Gv);

    double alpha = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= sched.newton_max_halvings; ++halving) {
      std::vector<double> u_try(u);
      for (int p = 0; p < N; ++p) u_try[static_cast<size_t>(p)] += alpha * step(p);
      const double t_try = t + alpha * step(N);
      if (t_try >= -sched.overshoot && t_try <= 1.0 + sched.overshoot) {
        try {
          std::vector<double> G_try;
          const double gn = full_res(u_try, t_try, G_try);
          if (gn < gnorm) {
            u = std::move(u_try);
            t = t_try;
            G = std::move(G_try);
            gnorm = gn;
            accepted = true;
            break;
          }
        } catch (const SolverError& e) {
          if (e.kind() != ErrorKind::cone && e.kind() != ErrorKind::domain &&
              e.kind() != ErrorKind::metric)
            throw;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted)
      fail(ErrorKind::nonconvergence, "arclength: damping exhausted");
    out.res_history.push_back(gnorm);
  }
  fail(ErrorKind::nonconvergence, "arclength: corrector did not converge");
}

} // namespace detail

using StepCallback = std::function<void(const PathState&)>;

// Advance t from the state's current value to 1 with adaptive natural
// continuation, falling back to pseudo-arclength at folds; the final answer is
// always polished at t = 1.
inline PathState continue_path(const HomotopyProblem& prob, const PathSchedule& sched,
                               PathState ps, const StepCallback& on_accept = {}) {
  const int N = prob.grid.size();
  if (ps.u.empty()) {
    // fresh start from the particular solution
    ps.u = prob.u0;
    ps.t = 0.0;
    ps.dt = sched.dt0;
    const auto q = detail::measure_step(prob, ps.u, sched);
    detail::enforce_monitors(prob, q, 0.0);
    NewtonResult nr0;
    nr0.res_history.push_back(inf_norm(prob.residual(ps.u, 0.0)));
    detail::record_step(prob, ps, 0.0, 0.0, nr0, q, false);
    if (on_accept) on_accept(ps);
  }

  int total_steps = static_cast<int>(ps.trace.steps.size());
  ps.max_t_reached = std::max(ps.max_t_reached, ps.t);

  while (ps.t < 1.0) {
    if (++total_steps > sched.max_steps)
      fail(ErrorKind::path, "path: step budget exhausted at t=" + std::to_string(ps.t));

    if (!ps.arclength) {
      const double t_try = std::min(ps.t + ps.dt, 1.0);
      bool ok = false;
      NewtonResult nr;
      try {
        nr = newton_solve(prob, ps.u, t_try, sched.tol, sched);
        ok = true;
      } catch (const SolverError& e) {
        if (e.kind() != ErrorKind::nonconvergence && e.kind() != ErrorKind::cone &&
            e.kind() != ErrorKind::domain && e.kind() != ErrorKind::metric &&
            e.kind() != ErrorKind::ellipticity)
          throw;
      }
      if (ok) {
        ps.u_prev = ps.u;
        ps.t_prev = ps.t;
        ps.has_prev = true;
        ps.u.assign(nr.u.data(), nr.u.data() + N);
        const double dt_used = t_try - ps.t;
        ps.t = t_try;
        ps.max_t_reached = std::max(ps.max_t_reached, ps.t);
        if (++ps.consecutive_successes >= 2)
          ps.dt = std::min(ps.dt * sched.grow, sched.dt_max);
        const auto q = detail::measure_step(prob, ps.u, sched);
        detail::enforce_monitors(prob, q, ps.t);
        detail::record_step(prob, ps, ps.t, dt_used, nr, q, false);
        if (on_accept) on_accept(ps);
      } else {
        ps.consecutive_successes = 0;
        ps.dt *= 0.5;
        if (ps.dt < sched.dt_min) {
          ps.arclength = true;
          ps.trace.used_arclength = true;
          ps.ds = 8.0 * sched.dt_min;
        }
      }
      continue;
    }

    // pseudo-arclength mode
    std::vector<double> xi_u(static_cast<size_t>(N), 0.0);
    double xi_t = 1.0;
    if (ps.has_prev) {
      double norm2 = 0.0;
      for (int p = 0; p < N; ++p) {
        xi_u[static_cast<size_t>(p)] = ps.u[static_cast<size_t>(p)] - ps.u_prev[static_cast<size_t>(p)];
        norm2 += xi_u[static_cast<size_t>(p)] * xi_u[static_cast<size_t>(p)];
      }
      xi_t = ps.t - ps.t_prev;
      norm2 += xi_t * xi_t;
      const double nrm = std::sqrt(norm2);
      if (nrm > 1e-14) {
        for (auto& v : xi_u) v /= nrm;
        xi_t /= nrm;
      } else {
        std::fill(xi_u.begin(), xi_u.end(), 0.0);
        xi_t = 1.0;
      }
    }
    bool ok = false;
    detail::ArcResult ar;
    try {
      ar = detail::arclength_correct(prob, ps.u, ps.t, xi_u, xi_t, ps.ds, sched);
      ok = true;
    } catch (const SolverError& e) {
      if (e.kind() != ErrorKind::nonconvergence && e.kind() != ErrorKind::cone &&
          e.kind() != ErrorKind::domain && e.kind() != ErrorKind::metric &&
          e.kind() != ErrorKind::ellipticity)
        throw;
    }
    if (!ok) {
      ps.ds *= 0.5;
      if (ps.ds < 1e-7)
        fail(ErrorKind::path, "path: fold not traversable, arclength step exhausted at t=" +
                                  std::to_string(ps.t));
      continue;
    }
    ps.u_prev = ps.u;
    ps.t_prev = ps.t;
    ps.has_prev = true;
    ps.u = ar.u;
    const double dt_used = ar.t - ps.t;
    ps.t = ar.t;
    NewtonResult nr;
    nr.iters = ar.iters;
    nr.res_history = ar.res_history;
    ps.ds = std::min(ps.ds * sched.grow, 0.25);
    if (ps.t > ps.max_t_reached + 1e-8) {
      // past the fold: resume natural stepping
      ps.max_t_reached = ps.t;
      ps.arclength = false;
      ps.consecutive_successes = 0;
      ps.dt = std::max(8.0 * sched.dt_min, std::abs(dt_used));
    }
    const auto q = detail::measure_step(prob, ps.u, sched);
    detail::enforce_monitors(prob, q, ps.t);
    detail::record_step(prob, ps, ps.t, dt_used, nr, q, true);
    if (on_accept) on_accept(ps);
    if (ps.t >= 1.0) break;
  }

  // final polish exactly at t = 1
  {
    NewtonResult nr = newton_solve(prob, ps.u, 1.0, sched.tol, sched);
    ps.u.assign(nr.u.data(), nr.u.data() + N);
    const bool had_exact_final = ps.t == 1.0 && !ps.trace.steps.empty() &&
                                 ps.trace.steps.back().t == 1.0 && nr.iters == 0;
    ps.t = 1.0;
    if (!had_exact_final) {
      const auto q = detail::measure_step(prob, ps.u, sched);
      detail::enforce_monitors(prob, q, 1.0);
      detail::record_step(prob, ps, 1.0, 0.0, nr, q, false);
      if (on_accept) on_accept(ps);
    }
  }
  return ps;
}

// Smallest lambda in the doubling sequence {8, 16, ...} for which the start is
// both coercive and empirically unique; the uniqueness probe is injected by
// the caller.
inline double estimate_lambda0(
    HomotopyProblem& prob, const LevelFoliation& fol,
    const std::function<bool(const HomotopyProblem&)>& uniqueness_probe) {
  for (double lambda = 8.0; lambda <= 65536.0; lambda *= 2.0) {
    prob.lambda = lambda;
    try {
      resolve_particular(prob, fol);
    } catch (const SolverError&) {
      continue;
    }
    const auto lin = prob.linearize(prob.u0, 0.0);
    Eigen::MatrixXd Jd(lin.J);
    Eigen::MatrixXd sym = 0.5 * (Jd + Jd.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues()(0) > 0.0)) continue;
    if (uniqueness_probe && !uniqueness_probe(prob)) continue;
    return lambda;
  }
  fail(ErrorKind::config, "lambda0: doubling sequence exhausted at 2^16");
}

} // namespace curvesolve
