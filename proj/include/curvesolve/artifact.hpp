#pragma once

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "curvesolve/checksum.hpp"
#include "curvesolve/errors.hpp"
#include "curvesolve/homotopy.hpp"
#include "curvesolve/scenario.hpp"
#include "curvesolve/version.hpp"

namespace curvesolve {

namespace detail {

inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_hex(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    fail(ErrorKind::parse, "artifact: bad number '" + s + "'");
  }
}

} // namespace detail

// Crash-safe write: the final name appears only after a complete temp file is
// renamed over it.
inline void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::internal, "io: cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) fail(ErrorKind::internal, "io: short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::parse, "io: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline const char* trace_header() {
  return "# t dt iters residual min_barrier_gap max_graddsq max_kappa u_checksum";
}

inline std::string format_trace_step(const TraceStep& s) {
  std::string out;
  out += detail::fmt_g17(s.t);
  out += " " + detail::fmt_g17(s.dt);
  out += " " + std::to_string(s.iters);
  out += " " + detail::fmt_g17(s.residual);
  out += " " + detail::fmt_g17(s.min_barrier_gap);
  out += " " + detail::fmt_g17(s.max_graddsq);
  out += " " + detail::fmt_g17(s.max_kappa);
  out += " " + checksum_hex(s.u_checksum);
  return out;
}

inline TraceStep parse_trace_step(const std::string& line) {
  std::istringstream in(line);
  TraceStep s;
  std::string cks;
  if (!(in >> s.t >> s.dt >> s.iters >> s.residual >> s.min_barrier_gap >> s.max_graddsq >>
        s.max_kappa >> cks))
    fail(ErrorKind::parse, "trace: malformed row '" + line + "'");
  s.u_checksum = std::stoull(cks, nullptr, 16);
  return s;
}

struct ResolvedParams {
  double lambda = 0.0;
  double tau0 = 0.0;
  double eps0 = 0.0;
  int n_levels = 0;
};

struct RunArtifact {
  std::string scenario_text; // canonical form
  ResolvedParams resolved;
  std::string diagnostics_text;
  std::vector<TraceStep> trace;
  std::vector<double> final_u;
  int grid_dim = 1;
  int n_theta = 0;
  int n_phi = 0;

  std::string to_text() const {
    std::string out;
    out += std::string(kVersion) + " artifact\n";
    out += "[scenario]\n" + scenario_text + "[/scenario]\n";
    out += "[resolved]\n";
    out += "lambda = " + detail::fmt_g17(resolved.lambda) + "\n";
    out += "tau0 = " + detail::fmt_g17(resolved.tau0) + "\n";
    out += "eps0 = " + detail::fmt_g17(resolved.eps0) + "\n";
    out += "n_levels = " + std::to_string(resolved.n_levels) + "\n";
    out += "[/resolved]\n";
    out += "[diagnostics]\n" + diagnostics_text + "[/diagnostics]\n";
    out += "[trace]\n";
    out += std::string(trace_header()) + "\n";
    for (const auto& s : trace) out += format_trace_step(s) + "\n";
    out += "[/trace]\n";
    out += "[solution]\n";
    out += grid_dim == 1 ? "# theta u\n" : "# phi theta u\n";
    for (size_t p = 0; p < final_u.size(); ++p) {
      if (grid_dim == 1) {
        out += detail::fmt_g17(2.0 * M_PI * static_cast<double>(p) / n_theta);
      } else {
        const int i = static_cast<int>(p) / n_theta;
        const int j = static_cast<int>(p) % n_theta;
        out += detail::fmt_g17((i + 0.5) * M_PI / n_phi) + " " +
               detail::fmt_g17(2.0 * M_PI * j / n_theta);
      }
      out += " " + detail::fmt_g17(final_u[p]) + "\n";
    }
    out += "[/solution]\n";
    out += "[checksum]\n";
    out += "fnv1a = " + checksum_hex(fnv1a64(out)) + "\n";
    out += "[/checksum]\n";
    return out;
  }

  static RunArtifact from_text(const std::string& text) {
    RunArtifact art;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::string scenario_acc, diag_acc;
    std::vector<std::string> trace_lines, solution_lines;
    std::string checksum_line;
    size_t checksum_prefix_len = 0;
    size_t consumed = 0;
    while (std::getline(in, line)) {
      const size_t line_len = line.size() + 1;
      if (line == "[checksum]") {
        checksum_prefix_len = consumed + line_len;
        section = "checksum";
        consumed += line_len;
        continue;
      }
      consumed += line_len;
      if (line.size() > 1 && line.front() == '[' && line.back() == ']') {
        if (line[1] == '/') section.clear();
        else section = line.substr(1, line.size() - 2);
        continue;
      }
      if (section == "scenario") scenario_acc += line + "\n";
      else if (section == "resolved") {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq - 1);
        const std::string val = line.substr(eq + 2);
        if (key == "lambda") art.resolved.lambda = detail::parse_double(val);
        else if (key == "tau0") art.resolved.tau0 = detail::parse_double(val);
        else if (key == "eps0") art.resolved.eps0 = detail::parse_double(val);
        else if (key == "n_levels") art.resolved.n_levels = std::stoi(val);
      } else if (section == "diagnostics") diag_acc += line + "\n";
      else if (section == "trace") {
        if (!line.empty() && line[0] != '#') trace_lines.push_back(line);
      } else if (section == "solution") {
        if (!line.empty() && line[0] != '#') solution_lines.push_back(line);
      } else if (section == "checksum") {
        if (line.rfind("fnv1a = ", 0) == 0) checksum_line = line.substr(8);
      }
    }
    if (!checksum_line.empty()) {
      // the stored hash covers every byte up to and including the
      // "[checksum]" line
      const uint64_t expect = std::stoull(checksum_line, nullptr, 16);
      const uint64_t got = fnv1a64(text.substr(0, checksum_prefix_len));
      if (expect != got) fail(ErrorKind::parse, "artifact: checksum mismatch");
    }
    art.scenario_text = scenario_acc;
    art.diagnostics_text = diag_acc;
    for (const auto& l : trace_lines) art.trace.push_back(parse_trace_step(l));
    const Scenario scn = Scenario::parse(scenario_acc);
    art.grid_dim = scn.get_int("ambient.dim_n", 1);
    art.n_theta = scn.get_int("grid.n_theta");
    art.n_phi = art.grid_dim == 2 ? scn.get_int("grid.n_phi") : 0;
    for (const auto& l : solution_lines) {
      std::istringstream ls(l);
      double a, b, c;
      if (art.grid_dim == 1) {
        if (!(ls >> a >> b)) fail(ErrorKind::parse, "artifact: bad solution row");
        art.final_u.push_back(b);
      } else {
        if (!(ls >> a >> b >> c)) fail(ErrorKind::parse, "artifact: bad solution row");
        art.final_u.push_back(c);
      }
    }
    return art;
  }
};

// Mid-path snapshot sufficient to reproduce the remainder of the run bitwise.
struct Checkpoint {
  std::string scenario_text;
  ResolvedParams resolved;
  std::string diagnostics_text;
  std::vector<TraceStep> trace;
  std::vector<double> u;
  double t = 0.0;
  double dt = 0.0;
  double ds = 0.0;
  int consecutive_successes = 0;
  bool arclength = false;
  bool has_prev = false;
  std::vector<double> u_prev;
  double t_prev = 0.0;
  double max_t_reached = 0.0;

  std::string to_text() const {
    std::string out;
    out += std::string(kVersion) + " checkpoint\n";
    out += "[scenario]\n" + scenario_text + "[/scenario]\n";
    out += "[resolved]\n";
    out += "lambda = " + detail::fmt_hex(resolved.lambda) + "\n";
    out += "tau0 = " + detail::fmt_hex(resolved.tau0) + "\n";
    out += "eps0 = " + detail::fmt_hex(resolved.eps0) + "\n";
    out += "n_levels = " + std::to_string(resolved.n_levels) + "\n";
    out += "[/resolved]\n";
    out += "[diagnostics]\n" + diagnostics_text + "[/diagnostics]\n";
    out += "[trace]\n";
    for (const auto& s : trace) out += format_trace_step(s) + "\n";
    out += "[/trace]\n";
    out += "[state]\n";
    out += "t = " + detail::fmt_hex(t) + "\n";
    out += "dt = " + detail::fmt_hex(dt) + "\n";
    out += "ds = " + detail::fmt_hex(ds) + "\n";
    out += "consecutive = " + std::to_string(consecutive_successes) + "\n";
    out += "arclength = " + std::string(arclength ? "1" : "0") + "\n";
    out += "has_prev = " + std::string(has_prev ? "1" : "0") + "\n";
    out += "t_prev = " + detail::fmt_hex(t_prev) + "\n";
    out += "max_t_reached = " + detail::fmt_hex(max_t_reached) + "\n";
    out += "[/state]\n";
    out += "[u]\n";
    for (double v : u) out += detail::fmt_hex(v) + "\n";
    out += "[/u]\n";
    out += "[u_prev]\n";
    for (double v : u_prev) out += detail::fmt_hex(v) + "\n";
    out += "[/u_prev]\n";
    return out;
  }

  static Checkpoint from_text(const std::string& text) {
    Checkpoint ck;
    std::istringstream in(text);
    std::string line, section;
    while (std::getline(in, line)) {
      if (line.size() > 1 && line.front() == '[' && line.back() == ']') {
        if (line[1] == '/') section.clear();
        else section = line.substr(1, line.size() - 2);
        continue;
      }
      if (section == "scenario") ck.scenario_text += line + "\n";
      else if (section == "diagnostics") ck.diagnostics_text += line + "\n";
      else if (section == "trace") {
        if (!line.empty() && line[0] != '#') ck.trace.push_back(parse_trace_step(line));
      } else if (section == "resolved" || section == "state") {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 3);
        if (key == "lambda") ck.resolved.lambda = detail::parse_double(val);
        else if (key == "tau0") ck.resolved.tau0 = detail::parse_double(val);
        else if (key == "eps0") ck.resolved.eps0 = detail::parse_double(val);
        else if (key == "n_levels") ck.resolved.n_levels = std::stoi(val);
        else if (key == "t") ck.t = detail::parse_double(val);
        else if (key == "dt") ck.dt = detail::parse_double(val);
        else if (key == "ds") ck.ds = detail::parse_double(val);
        else if (key == "consecutive") ck.consecutive_successes = std::stoi(val);
        else if (key == "arclength") ck.arclength = val == "1";
        else if (key == "has_prev") ck.has_prev = val == "1";
        else if (key == "t_prev") ck.t_prev = detail::parse_double(val);
        else if (key == "max_t_reached") ck.max_t_reached = detail::parse_double(val);
      } else if (section == "u") {
        ck.u.push_back(detail::parse_double(line));
      } else if (section == "u_prev") {
        ck.u_prev.push_back(detail::parse_double(line));
      }
    }
    if (ck.scenario_text.empty()) fail(ErrorKind::parse, "checkpoint: missing scenario section");
    return ck;
  }
};

} // namespace curvesolve
