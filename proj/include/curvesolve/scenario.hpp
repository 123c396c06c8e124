#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "curvesolve/ambient.hpp"
#include "curvesolve/barriers.hpp"
#include "curvesolve/curvature.hpp"
#include "curvesolve/errors.hpp"
#include "curvesolve/expr.hpp"
#include "curvesolve/grid.hpp"
#include "curvesolve/rhs.hpp"

namespace curvesolve {

// Flat dotted key = value scenario format. Lines starting with '#' and blank
// lines are ignored; keys are validated against the known set so typos fail
// loudly at parse time.
struct Scenario {
  std::map<std::string, std::string> kv;

  static const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "ambient.kind", "ambient.dim_n", "ambient.warp", "ambient.x0_min", "ambient.x0_max",
        "grid.n_theta", "grid.n_phi",
        "curvature.kind", "curvature.k",
        "rhs.f", "rhs.c1", "rhs.c2", "rhs.clamp",
        "barriers.u1", "barriers.u2", "barriers.epsilon1", "barriers.slack",
        "homotopy.lambda", "homotopy.tau0", "homotopy.dt0", "homotopy.tol", "homotopy.max_steps",
        "tubular.eps0", "tubular.n_levels",
        "monitors.grad_cap", "monitors.kappa_cap",
        "diagnostics.uniqueness", "diagnostics.trials", "diagnostics.coercivity",
        "diagnostics.jacobian_fd",
        "seed"};
    return keys;
  }

  static Scenario parse(const std::string& text) {
    Scenario s;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      auto trim = [](std::string& t) {
        const auto b = t.find_first_not_of(" \t\r");
        const auto e = t.find_last_not_of(" \t\r");
        t = b == std::string::npos ? "" : t.substr(b, e - b + 1);
      };
      trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        fail(ErrorKind::parse, "scenario: line " + std::to_string(lineno) + " has no '='");
      std::string key = line.substr(0, eq);
      std::string val = line.substr(eq + 1);
      trim(key);
      trim(val);
      const auto& keys = known_keys();
      if (std::find(keys.begin(), keys.end(), key) == keys.end())
        fail(ErrorKind::parse, "scenario: unknown key '" + key + "' (line " +
                                   std::to_string(lineno) + ")");
      if (s.kv.count(key))
        fail(ErrorKind::parse, "scenario: duplicate key '" + key + "'");
      if (val.empty())
        fail(ErrorKind::parse, "scenario: empty value for '" + key + "'");
      s.kv[key] = val;
    }
    return s;
  }

  std::string serialize() const {
    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
  }

  bool operator==(const Scenario& o) const { return kv == o.kv; }

  bool has(const std::string& key) const { return kv.count(key) > 0; }

  std::string get_str(const std::string& key, const std::string& dflt = "") const {
    auto it = kv.find(key);
    if (it == kv.end()) {
      if (dflt.empty())
        fail(ErrorKind::parse, "scenario: missing required key '" + key + "'");
      return dflt;
    }
    return it->second;
  }

  double get_double(const std::string& key, std::optional<double> dflt = std::nullopt) const {
    auto it = kv.find(key);
    if (it == kv.end()) {
      if (!dflt) fail(ErrorKind::parse, "scenario: missing required key '" + key + "'");
      return *dflt;
    }
    try {
      size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size())
        fail(ErrorKind::parse, "scenario: bad number for '" + key + "'");
      return v;
    } catch (const SolverError&) {
      throw;
    } catch (const std::exception&) {
      fail(ErrorKind::parse, "scenario: bad number for '" + key + "'");
    }
  }

  int get_int(const std::string& key, std::optional<int> dflt = std::nullopt) const {
    const double v = dflt ? get_double(key, static_cast<double>(*dflt)) : get_double(key);
    return static_cast<int>(v);
  }

  bool get_bool(const std::string& key, bool dflt) const {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
    if (it->second == "false" || it->second == "0" || it->second == "no") return false;
    fail(ErrorKind::parse, "scenario: bad boolean for '" + key + "'");
  }

  uint64_t get_seed() const {
    auto it = kv.find("seed");
    if (it == kv.end()) return 0;
    return static_cast<uint64_t>(std::stoull(it->second));
  }
};

inline AmbientManifold make_ambient(const Scenario& s) {
  const std::string kind = s.get_str("ambient.kind");
  const int dim = s.get_int("ambient.dim_n", 1);
  AmbientKind k;
  if (kind == "euclidean_polar") k = AmbientKind::euclidean_polar;
  else if (kind == "sphere_polar") k = AmbientKind::sphere_polar;
  else if (kind == "hyperbolic_polar") k = AmbientKind::hyperbolic_polar;
  else if (kind == "warped") k = AmbientKind::warped;
  else fail(ErrorKind::parse, "scenario: unknown ambient.kind '" + kind + "'");
  AmbientManifold m = AmbientManifold::make(k, dim);
  if (s.has("ambient.warp")) {
    std::istringstream in(s.get_str("ambient.warp"));
    std::string tok;
    int idx = 0;
    m.warp = {0.0, 0.0, 0.0, 0.0};
    while (std::getline(in, tok, ',') && idx < 4) m.warp[static_cast<size_t>(idx++)] = std::stod(tok);
  }
  if (s.has("ambient.x0_min")) m.x0_min = s.get_double("ambient.x0_min");
  if (s.has("ambient.x0_max")) m.x0_max = s.get_double("ambient.x0_max");
  return m;
}

inline Grid make_grid(const Scenario& s, const AmbientManifold& m) {
  const int n_theta = s.get_int("grid.n_theta");
  if (m.dim_n == 1) return Grid::circle(n_theta);
  return Grid::sphere(s.get_int("grid.n_phi"), n_theta);
}

inline CurvatureFunction make_curvature(const Scenario& s) {
  const std::string kind = s.get_str("curvature.kind");
  if (kind == "mean") return CurvatureFunction::mean();
  if (kind == "gauss_root") return CurvatureFunction::gauss_root();
  if (kind == "sigma_k_root") return CurvatureFunction::sigma_root(s.get_int("curvature.k"));
  fail(ErrorKind::parse, "scenario: unknown curvature.kind '" + kind + "'");
}

inline RightHandSide make_rhs(const Scenario& s, int dim) {
  return RightHandSide::parse(s.get_str("rhs.f"), dim, s.get_double("rhs.c1"),
                              s.get_double("rhs.c2"), s.get_bool("rhs.clamp", false));
}

inline std::vector<double> eval_graph_expression(const std::string& text, const Grid& grid) {
  const std::vector<std::string> vars =
      grid.dim_n == 1 ? std::vector<std::string>{"theta"}
                      : std::vector<std::string>{"phi", "theta"};
  const ExprRef e = ExprRef::parse(text, vars);
  std::vector<double> out(static_cast<size_t>(grid.size()));
  for (int p = 0; p < grid.size(); ++p) {
    const auto x = grid.coords(p);
    std::array<double, 2> slots{x[0], x[1]};
    out[static_cast<size_t>(p)] =
        e.eval(std::span<const double>(slots.data(), static_cast<size_t>(grid.dim_n)));
  }
  return out;
}

inline BarrierPair make_barriers(const Scenario& s, const Grid& grid) {
  BarrierPair pair;
  pair.u1 = eval_graph_expression(s.get_str("barriers.u1"), grid);
  pair.u2 = eval_graph_expression(s.get_str("barriers.u2"), grid);
  pair.epsilon1 = s.get_double("barriers.epsilon1");
  return pair;
}

} // namespace curvesolve
