#pragma once

// Shared scenario fixtures for the solver test suites.

#include <cmath>
#include <vector>

#include "curvesolve/homotopy.hpp"

namespace curvesolve::fixtures {

inline std::vector<double> constant_graph(const Grid& g, double value) {
  return std::vector<double>(static_cast<size_t>(g.size()), value);
}

// Flat circle scenario: F = kappa, f = 2/x0^2, target u = 2.
inline HomotopyProblem euclidean_problem(int N = 256, double lambda = 50.0,
                                         double epsilon1 = 0.02) {
  HomotopyProblem prob;
  prob.ambient = AmbientManifold::make(AmbientKind::euclidean_polar, 1);
  prob.grid = Grid::circle(N);
  prob.F = CurvatureFunction::mean();
  prob.rhs = RightHandSide::parse("2/x0^2", 1, 0.25, 1.5);
  prob.barriers.u1 = constant_graph(prob.grid, 1.5);
  prob.barriers.u2 = constant_graph(prob.grid, 2.5);
  prob.barriers.epsilon1 = epsilon1;
  prob.monitors = make_monitors(prob.ambient, prob.grid, prob.barriers);
  prob.lambda = lambda;
  return prob;
}

inline LevelFoliation euclidean_foliation(const HomotopyProblem& prob, double eps0 = 0.05,
                                          int n_levels = 11) {
  return build_foliation(prob.ambient, prob.grid, prob.barriers.u2, eps0, n_levels);
}

// Unit-sphere ambient scenario: F = kappa, f = 1 + 4(pi/4 - x0), target pi/4.
inline HomotopyProblem sphere_problem(int N = 256, double lambda = 50.0) {
  HomotopyProblem prob;
  prob.ambient = AmbientManifold::make(AmbientKind::sphere_polar, 1);
  prob.grid = Grid::circle(N);
  prob.F = CurvatureFunction::mean();
  prob.rhs = RightHandSide::parse("1+4*(pi/4-x0)", 1, 0.2, 3.0);
  prob.barriers.u1 = constant_graph(prob.grid, 0.6);
  prob.barriers.u2 = constant_graph(prob.grid, 0.95);
  prob.barriers.epsilon1 = 0.25;
  prob.monitors = make_monitors(prob.ambient, prob.grid, prob.barriers);
  prob.lambda = lambda;
  return prob;
}

// n = 2 scenario in the unit three-sphere with the square-root Gauss curvature.
inline HomotopyProblem s3_problem(int n_phi = 16, int n_theta = 32, double lambda = 50.0) {
  HomotopyProblem prob;
  prob.ambient = AmbientManifold::make(AmbientKind::sphere_polar, 2);
  prob.grid = Grid::sphere(n_phi, n_theta);
  prob.F = CurvatureFunction::gauss_root();
  prob.rhs = RightHandSide::parse("1+4*(pi/4-x0)", 2, 0.2, 3.0);
  prob.barriers.u1 = constant_graph(prob.grid, 0.6);
  prob.barriers.u2 = constant_graph(prob.grid, 0.95);
  prob.barriers.epsilon1 = 0.25;
  prob.monitors = make_monitors(prob.ambient, prob.grid, prob.barriers);
  prob.lambda = lambda;
  return prob;
}

// Flat cylinder fixture (warp = 1): mean curvature of a constant graph is
// zero, so the particular solution is pinned by hand instead of through the
// penalty bracket, which is infeasible when F vanishes identically.
inline HomotopyProblem flat_slab_problem(int N = 64, double lambda = 8.0) {
  HomotopyProblem prob;
  prob.ambient = AmbientManifold::make(AmbientKind::warped, 1);
  prob.ambient.warp = {1.0, 0.0, 0.0, 0.0};
  prob.grid = Grid::circle(N);
  prob.F = CurvatureFunction::mean();
  prob.rhs = RightHandSide::parse("0.5", 1, 0.25, 1.5);
  prob.barriers.u1 = constant_graph(prob.grid, 0.0);
  prob.barriers.u2 = constant_graph(prob.grid, 2.0);
  prob.barriers.epsilon1 = 0.01;
  prob.monitors.grad_cap = 4.0;
  prob.monitors.kappa_cap = std::numeric_limits<double>::infinity();
  prob.lambda = lambda;
  prob.tau0 = -0.001;
  prob.u0 = constant_graph(prob.grid, 1.0);
  prob.phi_tau0 = prob.u0;
  prob.f0_base.assign(static_cast<size_t>(N), 0.0);
  return prob;
}

} // namespace curvesolve::fixtures
