#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <span>
#include <vector>

#include "curvesolve/dual.hpp"
#include "curvesolve/expr.hpp"
#include "curvesolve/grid.hpp"

using namespace curvesolve;

namespace {

double d1_error_circle(int N) {
  const Grid g = Grid::circle(N);
  std::vector<double> f(static_cast<size_t>(N));
  for (int p = 0; p < N; ++p) f[static_cast<size_t>(p)] = std::sin(3.0 * g.theta(p));
  double err = 0.0;
  for (int p = 0; p < N; ++p) {
    const double exact = 3.0 * std::cos(3.0 * g.theta(p));
    err = std::max(err, std::abs(g.d1(std::span<const double>(f), p, 0) - exact));
  }
  return err;
}

} // namespace

TEST_CASE("circle stencils are 4th order") {
  const double e64 = d1_error_circle(64);
  const double e128 = d1_error_circle(128);
  const double order = std::log2(e64 / e128);
  REQUIRE(order > 3.7);
}

TEST_CASE("circle second derivative") {
  const int N = 128;
  const Grid g = Grid::circle(N);
  std::vector<double> f(static_cast<size_t>(N));
  for (int p = 0; p < N; ++p) f[static_cast<size_t>(p)] = std::cos(2.0 * g.theta(p));
  for (int p = 0; p < N; p += 17) {
    const double exact = -4.0 * std::cos(2.0 * g.theta(p));
    REQUIRE(g.d2(std::span<const double>(f), p, 0) == Catch::Approx(exact).margin(1e-5));
  }
}

TEST_CASE("sphere grid avoids the poles and stencils stay accurate across them") {
  const Grid g = Grid::sphere(16, 32);
  REQUIRE(g.size() == 512);
  for (int i = 0; i < g.n_phi; ++i) {
    REQUIRE(g.phi(i) > 0.0);
    REQUIRE(g.phi(i) < M_PI);
  }
  // f = z = cos(phi) is smooth on the sphere; the phi-derivative near the pole
  // must come out right through the reflected ghost rows.
  std::vector<double> f(static_cast<size_t>(g.size()));
  for (int p = 0; p < g.size(); ++p) f[static_cast<size_t>(p)] = std::cos(g.phi(g.row(p)));
  for (int j = 0; j < g.n_theta; j += 5) {
    const int p = g.index(0, j); // closest row to the pole
    const double exact = -std::sin(g.phi(0));
    REQUIRE(g.d1(std::span<const double>(f), p, 0) == Catch::Approx(exact).margin(2e-4));
  }
  // x = sin(phi) cos(theta) exercises the antipodal column mapping
  std::vector<double> fx(static_cast<size_t>(g.size()));
  for (int p = 0; p < g.size(); ++p)
    fx[static_cast<size_t>(p)] = std::sin(g.phi(g.row(p))) * std::cos(g.theta(g.col(p)));
  for (int j = 0; j < g.n_theta; j += 7) {
    const int p = g.index(0, j);
    const double exact = std::cos(g.phi(0)) * std::cos(g.theta(j));
    REQUIRE(g.d1(std::span<const double>(fx), p, 0) == Catch::Approx(exact).margin(2e-4));
  }
}

TEST_CASE("sphere quadrature weights sum to the round area") {
  const Grid g = Grid::sphere(24, 48);
  double sum = 0.0;
  for (int p = 0; p < g.size(); ++p) sum += g.weight(p);
  REQUIRE(sum == Catch::Approx(4.0 * M_PI).epsilon(1e-3));
}

TEST_CASE("grid size limits enforced") {
  REQUIRE_THROWS_AS(Grid::circle(8), SolverError);
  REQUIRE_THROWS_AS(Grid::sphere(4, 32), SolverError);
  REQUIRE_THROWS_AS(Grid::sphere(16, 31), SolverError);
}

TEST_CASE("footprint ball is symmetric enough to cover the operator") {
  const Grid g = Grid::circle(32);
  const auto b = g.ball4(0);
  // radius-4 wrap-around window
  REQUIRE(b.size() == 9);
  REQUIRE(std::find(b.begin(), b.end(), 28) != b.end());
  REQUIRE(std::find(b.begin(), b.end(), 4) != b.end());
}

TEST_CASE("expression parsing and evaluation") {
  const auto e = Expr::parse("2/(x0)^2*(1+0.05*cos(theta))", {"x0", "theta"});
  const std::vector<double> slots{2.0, 0.0};
  REQUIRE(e.eval<double>(slots) == Catch::Approx(0.5 * 1.05));

  const auto lin = Expr::parse("1+4*(pi/4-x0)", {"x0"});
  const std::vector<double> s2{M_PI / 4.0};
  REQUIRE(lin.eval<double>(s2) == Catch::Approx(1.0));

  REQUIRE_THROWS_AS(Expr::parse("2*unknown_var", {"x0"}), SolverError);
  REQUIRE_THROWS_AS(Expr::parse("sin(x0", {"x0"}), SolverError);
  REQUIRE_THROWS_AS(Expr::parse("x0 + ", {"x0"}), SolverError);
}

TEST_CASE("expression respects precedence and unary minus") {
  const auto e = Expr::parse("-x0^2 + 2*3", {"x0"});
  const std::vector<double> slots{2.0};
  REQUIRE(e.eval<double>(slots) == Catch::Approx(2.0)); // -(4) + 6
}

TEST_CASE("dual numbers differentiate expressions exactly") {
  const auto e = Expr::parse("2/(x0)^2", {"x0"});
  const std::vector<Dual> slots{Dual(2.0, 1.0)};
  const Dual v = e.eval<Dual>(slots);
  REQUIRE(v.v == Catch::Approx(0.5));
  REQUIRE(v.d == Catch::Approx(-0.5)); // d/dr 2 r^-2 = -4 r^-3 = -0.5 at r=2
}

TEST_CASE("dual arithmetic chain rule") {
  const Dual x(0.7, 1.0);
  const Dual y = sin(x) * exp(x) + pow(x, 3.0);
  const double expect = std::cos(0.7) * std::exp(0.7) + std::sin(0.7) * std::exp(0.7) +
                        3.0 * 0.7 * 0.7;
  REQUIRE(y.d == Catch::Approx(expect).epsilon(1e-14));
}
