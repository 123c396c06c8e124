#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "curvesolve/homotopy.hpp"

namespace curvesolve {

// Deterministic splitmix64; the standard library distributions are not
// reproducible across implementations, so bits are mapped to doubles directly.
struct SplitMix64 {
  uint64_t s;
  explicit SplitMix64(uint64_t seed) : s(seed) {}
  uint64_t next() {
    s += 0x9e3779b97f4a7c15ull;
    uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double sym() { return 2.0 * uniform() - 1.0; }
};

// Fixed-spectrum smooth noise (8 low modes), sup-norm one. On the sphere the
// modes are restrictions of polynomials in the ambient coordinates, so they
// stay smooth across the poles.
inline std::vector<double> smooth_noise(const Grid& grid, SplitMix64& rng) {
  const int N = grid.size();
  std::vector<double> out(static_cast<size_t>(N), 0.0);
  struct Mode {
    double a, b;
    int q, r;
  };
  std::vector<Mode> modes;
  for (int m = 1; m <= 8; ++m) {
    Mode md;
    md.a = rng.sym() / m;
    md.b = rng.uniform() * 2.0 * M_PI;
    md.q = grid.dim_n == 1 ? m : (m % 3);
    md.r = m % 2 + 1;
    modes.push_back(md);
  }
  for (int p = 0; p < N; ++p) {
    const auto x = grid.coords(p);
    double v = 0.0;
    for (const auto& md : modes) {
      if (grid.dim_n == 1) {
        v += md.a * std::cos(md.q * x[0] + md.b);
      } else {
        v += md.a * std::pow(std::sin(x[0]), md.q) * std::cos(md.q * x[1] + md.b) *
             std::pow(std::cos(x[0]), md.r);
      }
    }
    out[static_cast<size_t>(p)] = v;
  }
  double mx = 0.0;
  for (double v : out) mx = std::max(mx, std::abs(v));
  if (mx > 0.0)
    for (double& v : out) v /= mx;
  return out;
}

struct DiagnosticReport {
  std::string name;
  bool pass = false;
  std::vector<std::pair<std::string, std::string>> fields;
  uint64_t seed = 0;

  void add(const std::string& k, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    fields.emplace_back(k, buf);
  }
  void add(const std::string& k, const std::string& v) { fields.emplace_back(k, v); }

  std::string to_text() const {
    std::string out = "== experiment: " + name + " ==\n";
    out += "pass = " + std::string(pass ? "yes" : "no") + "\n";
    out += "seed = " + std::to_string(seed) + "\n";
    for (const auto& [k, v] : fields) out += k + " = " + v + "\n";
    return out;
  }
};

// Draws admissible starts spread through the barrier gap and checks that
// Newton at t = 0 sends every one of them back to the particular solution.
inline DiagnosticReport uniqueness_experiment(const HomotopyProblem& prob, int trials,
                                              uint64_t seed, const PathSchedule& sched = {}) {
  DiagnosticReport rep;
  rep.name = "uniqueness";
  rep.seed = seed;
  const int N = prob.grid.size();
  if (trials == 0) {
    rep.pass = true;
    rep.add("trials", 0.0);
    return rep;
  }
  SplitMix64 rng(seed);
  int converged = 0;
  double max_dist = 0.0;
  for (int k = 0; k < trials; ++k) {
    const double frac = (k + 1.0) / (trials + 1.0);
    std::vector<double> base(static_cast<size_t>(N));
    double gap = std::numeric_limits<double>::infinity();
    for (int p = 0; p < N; ++p) {
      base[static_cast<size_t>(p)] =
          prob.barriers.u1[static_cast<size_t>(p)] +
          frac * (prob.barriers.u2[static_cast<size_t>(p)] - prob.barriers.u1[static_cast<size_t>(p)]);
      gap = std::min(gap, std::min(base[static_cast<size_t>(p)] - prob.barriers.u1[static_cast<size_t>(p)],
                                   prob.barriers.u2[static_cast<size_t>(p)] - base[static_cast<size_t>(p)]));
    }
    const std::vector<double> noise = smooth_noise(prob.grid, rng);
    double amp = 0.5 * gap;
    std::vector<double> start(static_cast<size_t>(N));
    bool admissible = false;
    for (int shrink = 0; shrink < 12 && !admissible; ++shrink) {
      for (int p = 0; p < N; ++p)
        start[static_cast<size_t>(p)] = base[static_cast<size_t>(p)] + amp * noise[static_cast<size_t>(p)];
      admissible = true;
      try {
        const GraphState st = graph_quantities(prob.ambient, prob.grid, start);
        const auto adm = admissibility(st, prob.F);
        admissible = adm.admissible;
        for (int p = 0; p < N && admissible; ++p)
          admissible = prob.barriers.u1[static_cast<size_t>(p)] < start[static_cast<size_t>(p)] &&
                       start[static_cast<size_t>(p)] < prob.barriers.u2[static_cast<size_t>(p)];
      } catch (const SolverError&) {
        admissible = false;
      }
      if (!admissible) amp *= 0.5;
    }
    if (!admissible) continue;
    try {
      const NewtonResult nr = newton_solve(prob, start, 0.0, sched.tol, sched);
      ++converged;
      double d = 0.0;
      for (int p = 0; p < N; ++p)
        d = std::max(d, std::abs(nr.u(p) - prob.u0[static_cast<size_t>(p)]));
      max_dist = std::max(max_dist, d);
    } catch (const SolverError&) {
      // non-convergence counts against the quota below
    }
  }
  rep.add("trials", static_cast<double>(trials));
  rep.add("converged", static_cast<double>(converged));
  rep.add("max_distance_to_u0", max_dist);
  rep.pass = converged >= static_cast<int>(std::ceil(0.9 * trials)) && max_dist <= 1e-8;
  return rep;
}

// Smallest eigenvalue of the symmetrized Jacobian at (u0, 0); the empirical
// zero-order bound is lambda - mu_min.
inline DiagnosticReport coercivity_check(const HomotopyProblem& prob,
                                         std::optional<double> lambda_override = std::nullopt) {
  DiagnosticReport rep;
  rep.name = "coercivity";
  HomotopyProblem probe = prob;
  if (lambda_override) probe.lambda = *lambda_override;
  const auto lin = probe.linearize(probe.u0, 0.0);
  Eigen::MatrixXd Jd(lin.J);
  Eigen::MatrixXd sym = 0.5 * (Jd + Jd.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  const double mu_min = es.eigenvalues()(0);
  rep.add("lambda", probe.lambda);
  rep.add("mu_min", mu_min);
  rep.add("c_emp", probe.lambda - mu_min);
  rep.add("min_aij_eig", lin.min_aij_eig);
  rep.pass = mu_min > 0.0;
  return rep;
}

// Nodal value of the regularity monitor w = log(max kappa) + lw log v + mw chi.
struct C2MonitorResult {
  bool defined = true;
  std::vector<double> w;
  double w_max = -std::numeric_limits<double>::infinity();
  double w_min = std::numeric_limits<double>::infinity();
  std::vector<int> undefined_nodes;
};

inline C2MonitorResult c2_monitor(const AmbientManifold& m, const Grid& grid,
                                  std::span<const double> u, double lambda_w, double mu_w) {
  C2MonitorResult res;
  if (!m.chi_supported()) {
    res.defined = false;
    return res;
  }
  const GraphState st = graph_quantities(m, grid, u);
  const int N = grid.size();
  res.w.assign(static_cast<size_t>(N), 0.0);
  for (int p = 0; p < N; ++p) {
    const double kmax = st.kappa[static_cast<size_t>(p)][grid.dim_n - 1];
    if (!(kmax > 0.0)) {
      res.defined = false;
      res.undefined_nodes.push_back(p);
      continue;
    }
    const double w = std::log(kmax) + lambda_w * std::log(st.geo.v[static_cast<size_t>(p)]) +
                     mu_w * m.chi(u[static_cast<size_t>(p)]);
    res.w[static_cast<size_t>(p)] = w;
    res.w_max = std::max(res.w_max, w);
    res.w_min = std::min(res.w_min, w);
  }
  return res;
}

// Assembled Jacobian action vs central differences of the residual along
// random smooth directions. `corrupt` flips one entry first (fault fixture).
inline DiagnosticReport jacobian_fd_check(const HomotopyProblem& prob,
                                          std::span<const double> u, double t, uint64_t seed,
                                          double eps = 1e-6, int ndirs = 10,
                                          bool corrupt = false) {
  DiagnosticReport rep;
  rep.name = "jacobian_fd";
  rep.seed = seed;
  const int N = prob.grid.size();
  auto lin = prob.linearize(u, t);
  Eigen::SparseMatrix<double> J = lin.J;
  if (corrupt) {
    for (int k = 0; k < J.outerSize(); ++k) {
      bool done = false;
      for (Eigen::SparseMatrix<double>::InnerIterator it(J, k); it; ++it)
        if (it.row() != it.col() && std::abs(it.value()) > 1e-6) {
          it.valueRef() = -it.value();
          done = true;
          break;
        }
      if (done) break;
    }
  }

  SplitMix64 rng(seed);
  double max_rel = 0.0;
  for (int d = 0; d < ndirs; ++d) {
    const std::vector<double> eta = smooth_noise(prob.grid, rng);
    Eigen::Map<const Eigen::VectorXd> ev(eta.data(), N);
    const Eigen::VectorXd Je = J * ev;
    std::vector<double> up(u.begin(), u.end()), um(u.begin(), u.end());
    for (int p = 0; p < N; ++p) {
      up[static_cast<size_t>(p)] += eps * eta[static_cast<size_t>(p)];
      um[static_cast<size_t>(p)] -= eps * eta[static_cast<size_t>(p)];
    }
    const std::vector<double> Gp = prob.residual(up, t);
    const std::vector<double> Gm = prob.residual(um, t);
    double scale = 0.0;
    for (int p = 0; p < N; ++p) scale = std::max(scale, std::abs(Je(p)));
    double err = 0.0;
    for (int p = 0; p < N; ++p) {
      const double fd = (Gp[static_cast<size_t>(p)] - Gm[static_cast<size_t>(p)]) / (2.0 * eps);
      err = std::max(err, std::abs(fd - Je(p)));
    }
    max_rel = std::max(max_rel, err / std::max(scale, 1e-30));
  }
  rep.add("directions", static_cast<double>(ndirs));
  rep.add("eps", eps);
  rep.add("max_rel_error", max_rel);
  rep.pass = max_rel <= 1e-6;
  return rep;
}

} // namespace curvesolve
