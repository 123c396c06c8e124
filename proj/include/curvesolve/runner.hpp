#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "curvesolve/artifact.hpp"
#include "curvesolve/diagnostics.hpp"
#include "curvesolve/homotopy.hpp"
#include "curvesolve/scenario.hpp"

namespace curvesolve {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

inline LogLevel log_level_from_env() {
  const char* v = std::getenv("CURVESOLVE_LOG");
  if (!v) return LogLevel::info;
  const std::string s(v);
  if (s == "quiet") return LogLevel::quiet;
  if (s == "debug") return LogLevel::debug;
  return LogLevel::info;
}

struct RunOptions {
  std::optional<uint64_t> seed_override;
  std::optional<int> grid_n_override;
  std::string out_path;             // artifact destination; empty = derive
  std::string checkpoint_dir;       // empty = <out_path>.checkpoints
  bool write_checkpoints = true;
  LogLevel log = LogLevel::info;
};

namespace detail {

inline void log_line(LogLevel have, LogLevel need, const std::string& msg) {
  if (static_cast<int>(have) >= static_cast<int>(need)) {
    std::fputs(msg.c_str(), stdout);
    std::fputc('\n', stdout);
    std::fflush(stdout);
  }
}

} // namespace detail

// Everything the pipeline builds from a scenario before continuation starts.
struct PreparedRun {
  Scenario scenario;
  AmbientManifold ambient;
  Grid grid;
  CurvatureFunction F;
  RightHandSide rhs;
  BarrierPair barriers;
  BarrierReport barrier_report;
  LevelFoliation foliation;
  HomotopyProblem problem;
  PathSchedule schedule;
  ResolvedParams resolved;
  std::string diagnostics_text;
  uint64_t seed = 0;
};

inline PathSchedule make_schedule(const Scenario& scn) {
  PathSchedule sched;
  sched.dt0 = scn.get_double("homotopy.dt0", 0.1);
  sched.tol = scn.get_double("homotopy.tol", 1e-10);
  sched.max_steps = scn.get_int("homotopy.max_steps", 500);
  return sched;
}

// Build, validate and resolve a scenario up to (but not including) the
// continuation itself. `resolved_override` is set when resuming.
inline PreparedRun prepare_run(Scenario scn, const RunOptions& opts,
                               std::optional<ResolvedParams> resolved_override = std::nullopt,
                               bool run_diagnostics = true) {
  if (opts.seed_override) scn.kv["seed"] = std::to_string(*opts.seed_override);
  if (opts.grid_n_override) scn.kv["grid.n_theta"] = std::to_string(*opts.grid_n_override);

  PreparedRun pr;
  pr.scenario = scn;
  pr.seed = scn.get_seed();
  pr.ambient = make_ambient(scn);
  pr.grid = make_grid(scn, pr.ambient);
  pr.F = make_curvature(scn);
  pr.rhs = make_rhs(scn, pr.ambient.dim_n);
  pr.barriers = make_barriers(scn, pr.grid);
  pr.schedule = make_schedule(scn);

  detail::log_line(opts.log, LogLevel::info, "[info] validating barriers");
  pr.barrier_report = validate_barriers(pr.barriers, pr.ambient, pr.grid, pr.F, pr.rhs,
                                        scn.get_double("barriers.slack", 1e-8));
  detail::log_line(opts.log, LogLevel::info,
                   "[info] barrier margins: upper " + std::to_string(pr.barrier_report.upper_margin) +
                       ", lower " + std::to_string(pr.barrier_report.lower_margin));

  if (!check_rhs_bounds(pr.rhs, pr.ambient, pr.grid, pr.barriers.u1, pr.barriers.u2))
    fail(ErrorKind::config, "rhs: sampled values leave the configured bounds [c1, c2]");

  // tubular neighbourhood: halve eps0 on failure, at most 6 times
  double span = 0.0;
  for (int p = 0; p < pr.grid.size(); ++p)
    span = std::max(span, pr.barriers.u2[static_cast<size_t>(p)]);
  double lo = std::numeric_limits<double>::infinity();
  for (int p = 0; p < pr.grid.size(); ++p)
    lo = std::min(lo, pr.barriers.u1[static_cast<size_t>(p)]);
  double eps0 = scn.has("tubular.eps0") ? scn.get_double("tubular.eps0")
                                        : 0.05 * (span - lo);
  if (resolved_override) eps0 = resolved_override->eps0;
  const int n_levels = resolved_override ? resolved_override->n_levels
                                         : scn.get_int("tubular.n_levels", 11);
  bool built = false;
  for (int attempt = 0; attempt <= 6 && !built; ++attempt) {
    try {
      detail::log_line(opts.log, LogLevel::debug,
                       "[debug] building foliation, eps0=" + std::to_string(eps0));
      pr.foliation = build_foliation(pr.ambient, pr.grid, pr.barriers.u2, eps0, n_levels);
      built = true;
    } catch (const SolverError& e) {
      if (e.kind() != ErrorKind::foliation || attempt == 6) throw;
      eps0 *= 0.5;
    }
  }
  verify_foliation(pr.foliation);
  pr.resolved.eps0 = eps0;
  pr.resolved.n_levels = n_levels;

  // problem skeleton
  pr.problem.ambient = pr.ambient;
  pr.problem.grid = pr.grid;
  pr.problem.F = pr.F;
  pr.problem.rhs = pr.rhs;
  pr.problem.barriers = pr.barriers;
  std::optional<double> grad_cap, kappa_cap;
  if (scn.has("monitors.grad_cap")) grad_cap = scn.get_double("monitors.grad_cap");
  if (scn.has("monitors.kappa_cap")) kappa_cap = scn.get_double("monitors.kappa_cap");
  pr.problem.monitors = make_monitors(pr.ambient, pr.grid, pr.barriers, grad_cap, kappa_cap);

  const int trials = scn.get_int("diagnostics.trials", 20);

  // lambda: pinned (resume), explicit, or the doubling estimate
  const std::string lam_s = scn.get_str("homotopy.lambda", "auto");
  const std::string tau_s = scn.get_str("homotopy.tau0", "auto");
  std::optional<double> pinned_tau;
  if (resolved_override) pinned_tau = resolved_override->tau0;
  else if (tau_s != "auto") pinned_tau = std::stod(tau_s);

  if (resolved_override) {
    pr.problem.lambda = resolved_override->lambda;
    resolve_particular(pr.problem, pr.foliation, pinned_tau);
  } else if (lam_s != "auto") {
    pr.problem.lambda = std::stod(lam_s);
    resolve_particular(pr.problem, pr.foliation, pinned_tau);
  } else {
    detail::log_line(opts.log, LogLevel::info, "[info] estimating lambda0 (doubling sequence)");
    const PathSchedule sched = pr.schedule;
    const uint64_t seed = pr.seed;
    estimate_lambda0(pr.problem, pr.foliation,
                     [trials, seed, &sched](const HomotopyProblem& p) {
                       return uniqueness_experiment(p, std::min(trials, 8), seed, sched).pass;
                     });
    if (pinned_tau) resolve_particular(pr.problem, pr.foliation, pinned_tau);
  }
  pr.resolved.lambda = pr.problem.lambda;
  pr.resolved.tau0 = pr.problem.tau0;
  detail::log_line(opts.log, LogLevel::info,
                   "[info] particular solution: lambda=" + std::to_string(pr.problem.lambda) +
                       " tau0=" + std::to_string(pr.problem.tau0));

  if (run_diagnostics) {
    std::string diag;
    if (scn.get_bool("diagnostics.uniqueness", true)) {
      const auto rep = uniqueness_experiment(pr.problem, trials, pr.seed, pr.schedule);
      diag += rep.to_text();
      detail::log_line(opts.log, LogLevel::info,
                       std::string("[info] uniqueness experiment: ") + (rep.pass ? "pass" : "FAIL"));
    }
    if (scn.get_bool("diagnostics.coercivity", true)) {
      const auto rep = coercivity_check(pr.problem);
      diag += rep.to_text();
      detail::log_line(opts.log, LogLevel::info,
                       std::string("[info] coercivity check: ") + (rep.pass ? "pass" : "FAIL"));
    }
    if (scn.get_bool("diagnostics.jacobian_fd", true)) {
      const auto rep = jacobian_fd_check(pr.problem, pr.problem.u0, 0.0, pr.seed);
      diag += rep.to_text();
      detail::log_line(opts.log, LogLevel::info,
                       std::string("[info] jacobian fd check: ") + (rep.pass ? "pass" : "FAIL"));
    }
    pr.diagnostics_text = diag;
  }
  return pr;
}

inline std::string default_out_path(const std::string& scenario_path) {
  std::filesystem::path p(scenario_path);
  return p.stem().string() + ".artifact";
}

inline RunArtifact assemble_artifact(const PreparedRun& pr, const PathState& ps) {
  RunArtifact art;
  art.scenario_text = pr.scenario.serialize();
  art.resolved = pr.resolved;
  std::string diag = pr.diagnostics_text;
  if (ps.trace.c2_monitor_defined) {
    DiagnosticReport c2;
    c2.name = "c2_monitor";
    c2.pass = true;
    c2.seed = pr.seed;
    c2.add("max_w_over_path", ps.trace.max_c2_monitor);
    diag += c2.to_text();
  }
  {
    DiagnosticReport tail;
    tail.name = "newton_tail";
    tail.pass = ps.trace.quad_tail_C <= 1e6;
    tail.seed = pr.seed;
    tail.add("quad_tail_C", ps.trace.quad_tail_C);
    diag += tail.to_text();
  }
  art.diagnostics_text = diag;
  art.trace = ps.trace.steps;
  art.final_u = ps.u;
  art.grid_dim = pr.grid.dim_n;
  art.n_theta = pr.grid.n_theta;
  art.n_phi = pr.grid.n_phi;
  return art;
}

inline Checkpoint make_checkpoint(const PreparedRun& pr, const PathState& ps) {
  Checkpoint ck;
  ck.scenario_text = pr.scenario.serialize();
  ck.resolved = pr.resolved;
  ck.diagnostics_text = pr.diagnostics_text;
  ck.trace = ps.trace.steps;
  ck.u = ps.u;
  ck.t = ps.t;
  ck.dt = ps.dt;
  ck.ds = ps.ds;
  ck.consecutive_successes = ps.consecutive_successes;
  ck.arclength = ps.arclength;
  ck.has_prev = ps.has_prev;
  ck.u_prev = ps.u_prev;
  ck.t_prev = ps.t_prev;
  ck.max_t_reached = ps.max_t_reached;
  return ck;
}

// Full pipeline: validate, build the particular problem, run diagnostics,
// follow the homotopy to t=1 and write the artifact atomically.
inline RunArtifact run_scenario(const Scenario& scn, const RunOptions& opts_in,
                                const std::string& scenario_path = "") {
  RunOptions opts = opts_in;
  if (opts.out_path.empty())
    opts.out_path = scenario_path.empty() ? "run.artifact" : default_out_path(scenario_path);
  if (opts.checkpoint_dir.empty()) opts.checkpoint_dir = opts.out_path + ".checkpoints";

  PreparedRun pr = prepare_run(scn, opts);

  StepCallback on_accept;
  if (opts.write_checkpoints) {
    const std::string dir = opts.checkpoint_dir;
    const PreparedRun* prp = &pr;
    on_accept = [dir, prp](const PathState& ps) {
      char name[32];
      std::snprintf(name, sizeof(name), "step_%04d.ckpt", static_cast<int>(ps.trace.steps.size()));
      atomic_write(dir + "/" + name, make_checkpoint(*prp, ps).to_text());
    };
  }

  detail::log_line(opts.log, LogLevel::info, "[info] starting continuation");
  PathState ps = continue_path(pr.problem, pr.schedule, PathState{}, on_accept);
  for (const auto& s : ps.trace.steps)
    detail::log_line(opts.log, LogLevel::debug,
                     "[debug] t=" + std::to_string(s.t) + " iters=" + std::to_string(s.iters) +
                         " res=" + std::to_string(s.residual));
  detail::log_line(opts.log, LogLevel::info,
                   "[info] reached t=1 in " + std::to_string(ps.trace.steps.size()) + " steps");

  const RunArtifact art = assemble_artifact(pr, ps);
  atomic_write(opts.out_path, art.to_text());
  detail::log_line(opts.log, LogLevel::info, "[info] artifact written to " + opts.out_path);
  return art;
}

// Resume a run from a mid-path checkpoint; the remainder of the trajectory and
// the final artifact reproduce the uninterrupted run bitwise.
inline RunArtifact resume_run(const std::string& checkpoint_path, const RunOptions& opts_in) {
  const Checkpoint ck = Checkpoint::from_text(read_file(checkpoint_path));
  const Scenario scn = Scenario::parse(ck.scenario_text);

  RunOptions opts = opts_in;
  if (opts.out_path.empty()) opts.out_path = "resumed.artifact";
  if (opts.checkpoint_dir.empty()) opts.checkpoint_dir = opts.out_path + ".checkpoints";

  PreparedRun pr = prepare_run(scn, opts, ck.resolved, /*run_diagnostics=*/false);
  pr.diagnostics_text = ck.diagnostics_text;

  PathState ps;
  ps.u = ck.u;
  ps.t = ck.t;
  ps.dt = ck.dt;
  ps.ds = ck.ds;
  ps.consecutive_successes = ck.consecutive_successes;
  ps.arclength = ck.arclength;
  ps.has_prev = ck.has_prev;
  ps.u_prev = ck.u_prev;
  ps.t_prev = ck.t_prev;
  ps.max_t_reached = ck.max_t_reached;
  ps.trace.steps = ck.trace;
  for (const auto& s : ck.trace)
    if (s.arclength) ps.trace.used_arclength = true;

  StepCallback on_accept;
  if (opts.write_checkpoints) {
    const std::string dir = opts.checkpoint_dir;
    const PreparedRun* prp = &pr;
    on_accept = [dir, prp](const PathState& ps2) {
      char name[32];
      std::snprintf(name, sizeof(name), "step_%04d.ckpt", static_cast<int>(ps2.trace.steps.size()));
      atomic_write(dir + "/" + name, make_checkpoint(*prp, ps2).to_text());
    };
  }

  detail::log_line(opts.log, LogLevel::info,
                   "[info] resuming continuation at t=" + std::to_string(ps.t));
  ps = continue_path(pr.problem, pr.schedule, std::move(ps), on_accept);
  const RunArtifact art = assemble_artifact(pr, ps);
  atomic_write(opts.out_path, art.to_text());
  return art;
}

// Columnar exports for plotting.
inline std::string export_plotdata(const RunArtifact& art, const std::string& what) {
  std::string out;
  if (what == "solution") {
    out += art.grid_dim == 1 ? "theta u\n" : "phi theta u\n";
    for (size_t p = 0; p < art.final_u.size(); ++p) {
      if (art.grid_dim == 1) {
        out += detail::fmt_g17(2.0 * M_PI * static_cast<double>(p) / art.n_theta);
      } else {
        const int i = static_cast<int>(p) / art.n_theta;
        const int j = static_cast<int>(p) % art.n_theta;
        out += detail::fmt_g17((i + 0.5) * M_PI / art.n_phi) + " " +
               detail::fmt_g17(2.0 * M_PI * j / art.n_theta);
      }
      out += " " + detail::fmt_g17(art.final_u[p]) + "\n";
    }
    return out;
  }
  if (what == "residual_history") {
    out += "t residual\n";
    for (const auto& s : art.trace)
      out += detail::fmt_g17(s.t) + " " + detail::fmt_g17(s.residual) + "\n";
    return out;
  }
  if (what == "curvature_profile") {
    const Scenario scn = Scenario::parse(art.scenario_text);
    const AmbientManifold m = make_ambient(scn);
    const Grid grid = make_grid(scn, m);
    const GraphState st = graph_quantities(m, grid, art.final_u);
    out += art.grid_dim == 1 ? "theta kappa1\n" : "phi theta kappa1 kappa2\n";
    for (int p = 0; p < grid.size(); ++p) {
      const auto x = grid.coords(p);
      if (art.grid_dim == 1) {
        out += detail::fmt_g17(x[0]) + " " + detail::fmt_g17(st.kappa[static_cast<size_t>(p)][0]);
      } else {
        out += detail::fmt_g17(x[0]) + " " + detail::fmt_g17(x[1]) + " " +
               detail::fmt_g17(st.kappa[static_cast<size_t>(p)][0]) + " " +
               detail::fmt_g17(st.kappa[static_cast<size_t>(p)][1]);
      }
      out += "\n";
    }
    return out;
  }
  fail(ErrorKind::config, "export: unknown selector '" + what + "'");
}

// Structured diagnose pipeline: validation, particular solution, experiments.
inline std::string diagnose_scenario(const Scenario& scn, const RunOptions& opts) {
  PreparedRun pr = prepare_run(scn, opts);
  std::string out = pr.diagnostics_text;
  {
    DiagnosticReport b;
    b.name = "barriers";
    b.pass = true;
    b.seed = pr.seed;
    b.add("upper_margin", pr.barrier_report.upper_margin);
    b.add("lower_margin", pr.barrier_report.lower_margin);
    b.add("sigma_size", static_cast<double>(pr.barrier_report.sigma_size));
    b.add("nodes", static_cast<double>(pr.barrier_report.n_nodes));
    out = b.to_text() + out;
  }
  const auto c2 = c2_monitor(pr.ambient, pr.grid, pr.problem.u0, 1.0, 1.0);
  if (c2.defined) {
    DiagnosticReport rep;
    rep.name = "c2_monitor_at_u0";
    rep.pass = true;
    rep.seed = pr.seed;
    rep.add("w_max", c2.w_max);
    rep.add("w_min", c2.w_min);
    out += rep.to_text();
  }
  return out;
}

} // namespace curvesolve
