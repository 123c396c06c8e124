#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "curvesolve/errors.hpp"

namespace curvesolve {

// Discretization of the base hypersurface:
//   n=1  uniform periodic nodes theta_j = j*h on [0, 2*pi)
//   n=2  latitude-longitude grid on the round sphere, cell-centered in
//        colatitude (phi_i = (i+1/2)*h_phi, no node sits on a pole),
//        periodic in longitude.
// Crossing a pole maps (phi, theta) -> (-phi, theta + pi); ghost rows use the
// antipodal column, with a sign flip for tensor components carrying an odd
// number of phi indices.
struct Grid {
  int dim_n = 1;
  int n_theta = 0;
  int n_phi = 0; // 0 for dim_n == 1
  double h_theta = 0.0;
  double h_phi = 0.0;

  static Grid circle(int n_theta) {
    if (n_theta < 16) fail(ErrorKind::config, "grid: n_theta must be >= 16");
    Grid g;
    g.dim_n = 1;
    g.n_theta = n_theta;
    g.h_theta = 2.0 * M_PI / n_theta;
    return g;
  }

  static Grid sphere(int n_phi, int n_theta) {
    if (n_theta < 16) fail(ErrorKind::config, "grid: n_theta must be >= 16");
    if (n_phi < 8) fail(ErrorKind::config, "grid: n_phi must be >= 8");
    if (n_theta % 2 != 0) fail(ErrorKind::config, "grid: n_theta must be even on the sphere");
    Grid g;
    g.dim_n = 2;
    g.n_phi = n_phi;
    g.n_theta = n_theta;
    g.h_theta = 2.0 * M_PI / n_theta;
    g.h_phi = M_PI / n_phi;
    return g;
  }

  int size() const { return dim_n == 1 ? n_theta : n_phi * n_theta; }
  int index(int i, int j) const { return i * n_theta + j; }
  int row(int node) const { return node / n_theta; }
  int col(int node) const { return node % n_theta; }

  double theta(int j) const { return j * h_theta; }
  double phi(int i) const { return (i + 0.5) * h_phi; }

  // Angular coordinates of a node; component order matches stencil directions:
  // n=1: {theta}; n=2: {phi, theta}.
  std::array<double, 2> coords(int node) const {
    if (dim_n == 1) return {theta(node), 0.0};
    return {phi(row(node)), theta(col(node))};
  }

  double spacing(int dir) const {
    if (dim_n == 1) return h_theta;
    return dir == 0 ? h_phi : h_theta;
  }

  // Quadrature weight of a node w.r.t. the round reference metric.
  double weight(int node) const {
    if (dim_n == 1) return h_theta;
    return h_phi * h_theta * std::sin(phi(row(node)));
  }

  // Resolve a possibly-ghost (row, col) pair to a canonical node plus the
  // parity sign picked up by pole reflection.
  struct Tap {
    int node;
    double sign;
  };

  Tap resolve(int i, int j, int phi_parity) const {
    if (dim_n == 1) {
      int jj = ((j % n_theta) + n_theta) % n_theta;
      return {jj, 1.0};
    }
    double sign = 1.0;
    int jj = j;
    int ii = i;
    while (ii < 0 || ii >= n_phi) {
      if (ii < 0) ii = -1 - ii;
      else ii = 2 * n_phi - 1 - ii;
      jj += n_theta / 2;
      if (phi_parity < 0) sign = -sign;
    }
    jj = ((jj % n_theta) + n_theta) % n_theta;
    return {index(ii, jj), sign};
  }

  // 4th-order centered first derivative along `dir`. `phi_parity` is the sign
  // behaviour of the field under pole reflection (+1 scalar-like, -1 for one
  // phi index); ignored for n=1 and for the theta direction.
  template <class T>
  T d1(std::span<const T> f, int node, int dir, int phi_parity = 1) const {
    const double h = spacing(dir);
    T acc = T(0);
    static constexpr std::array<std::pair<int, double>, 4> w = {
        {{-2, 1.0}, {-1, -8.0}, {1, 8.0}, {2, -1.0}}};
    for (auto [off, c] : w) {
      Tap t = tap_offset(node, dir, off, phi_parity);
      acc += (c * t.sign) * f[t.node];
    }
    return (1.0 / (12.0 * h)) * acc;
  }

  // 4th-order centered second derivative along `dir`.
  template <class T>
  T d2(std::span<const T> f, int node, int dir, int phi_parity = 1) const {
    const double h = spacing(dir);
    T acc = (-30.0) * f[resolve_node(node)];
    static constexpr std::array<std::pair<int, double>, 4> w = {
        {{-2, -1.0}, {-1, 16.0}, {1, 16.0}, {2, -1.0}}};
    for (auto [off, c] : w) {
      Tap t = tap_offset(node, dir, off, phi_parity);
      acc += (c * t.sign) * f[t.node];
    }
    return (1.0 / (12.0 * h * h)) * acc;
  }

  // Nodes within the radius-2 stencil box of `node` (canonical indices).
  std::vector<int> ball2(int node) const {
    std::vector<int> out;
    if (dim_n == 1) {
      for (int off = -2; off <= 2; ++off) out.push_back(resolve(0, node + off, 1).node);
    } else {
      const int i = row(node), j = col(node);
      for (int a = -2; a <= 2; ++a)
        for (int b = -2; b <= 2; ++b) out.push_back(resolve(i + a, j + b, 1).node);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  // Influence footprint for the discrete curvature operator: two composed
  // radius-2 stencil layers.
  std::vector<int> ball4(int node) const {
    std::vector<int> out;
    for (int m : ball2(node)) {
      auto b = ball2(m);
      out.insert(out.end(), b.begin(), b.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

private:
  int resolve_node(int node) const { return node; }

  Tap tap_offset(int node, int dir, int off, int phi_parity) const {
    if (dim_n == 1) return resolve(0, node + off, 1);
    const int i = row(node), j = col(node);
    if (dir == 0) return resolve(i + off, j, phi_parity);
    return resolve(i, j + off, phi_parity);
  }
};

} // namespace curvesolve
