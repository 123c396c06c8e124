#include <catch2/catch_amalgamated.hpp>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "curvesolve/curvature.hpp"
#include "curvesolve/diagnostics.hpp"

using namespace curvesolve;

namespace {

// Independent eigenvalue oracle: scan det(h - k g) for sign changes and
// bisect each bracket. No factorization shared with the library path.
std::vector<double> charpoly_eigenvalues(const Eigen::MatrixXd& h, const Eigen::MatrixXd& g) {
  const int n = static_cast<int>(h.rows());
  auto det_at = [&](double k) { return (h - k * g).determinant(); };
  // conservative spectral bound via row sums
  double bound = 1.0;
  const Eigen::MatrixXd gi = g.inverse() * h;
  for (int i = 0; i < n; ++i) bound = std::max(bound, gi.row(i).cwiseAbs().sum());
  bound = 2.0 * bound + 1.0;
  const int samples = 20000;
  std::vector<double> roots;
  double prev_k = -bound, prev_v = det_at(prev_k);
  for (int s = 1; s <= samples; ++s) {
    const double k = -bound + 2.0 * bound * s / samples;
    const double v = det_at(k);
    if (prev_v == 0.0) roots.push_back(prev_k);
    else if (v != 0.0 && std::signbit(v) != std::signbit(prev_v)) {
      double lo = prev_k, hi = k;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double dv = det_at(mid);
        if (dv == 0.0) { lo = hi = mid; break; }
        if (std::signbit(dv) == std::signbit(det_at(lo))) lo = mid;
        else hi = mid;
      }
      roots.push_back(0.5 * (lo + hi));
    }
    prev_k = k;
    prev_v = v;
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

Eigen::MatrixXd random_sym(int n, SplitMix64& rng, double scale = 1.0) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = scale * rng.sym();
  return a;
}

Eigen::MatrixXd random_spd(int n, SplitMix64& rng) {
  const Eigen::MatrixXd a = random_sym(n, rng);
  return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

std::vector<double> random_cone_point(const CurvatureFunction& F, int n, SplitMix64& rng) {
  for (;;) {
    std::vector<double> k(static_cast<size_t>(n));
    for (auto& v : k) v = F.kind == CurvatureKind::mean ? 3.0 * rng.sym() : 0.05 + 3.0 * rng.uniform();
    if (F.in_cone(k)) return k;
  }
}

} // namespace

TEST_CASE("curvature function values match hand computations") {
  const auto mean = CurvatureFunction::mean();
  std::vector<double> k11{1.0, 1.0};
  REQUIRE(mean.value(k11) == 2.0);

  const auto gauss = CurvatureFunction::gauss_root();
  std::vector<double> k22{2.0, 2.0};
  REQUIRE(gauss.value(k22) == Catch::Approx(2.0));

  const auto s2 = CurvatureFunction::sigma_root(2);
  std::vector<double> k111{1.0, 1.0, 1.0};
  REQUIRE(s2.value(k111) == Catch::Approx(std::sqrt(3.0)).epsilon(1e-12));
  REQUIRE(s2.value(k111) == Catch::Approx(1.7320508).margin(1e-7));
}

TEST_CASE("gradients match hand computations and the Euler identity") {
  const auto mean = CurvatureFunction::mean();
  std::vector<double> k{0.4, -1.3, 2.0};
  const auto gm = mean.gradient(k);
  for (double v : gm) REQUIRE(v == 1.0);

  const auto gauss = CurvatureFunction::gauss_root();
  std::vector<double> k14{1.0, 4.0};
  const auto gg = gauss.gradient(k14);
  REQUIRE(gg[0] == Catch::Approx(1.0));
  REQUIRE(gg[1] == Catch::Approx(0.25));
  REQUIRE(1.0 * gg[0] + 4.0 * gg[1] == Catch::Approx(gauss.value(k14)).epsilon(1e-14));
}

TEST_CASE("cone violations carry the offending point") {
  const auto gauss = CurvatureFunction::gauss_root();
  std::vector<double> bad{-1.0, 2.0};
  try {
    gauss.value(bad);
    FAIL("expected a cone violation");
  } catch (const SolverError& e) {
    REQUIRE(e.kind() == ErrorKind::cone);
    REQUIRE(std::string(e.what()).find("-1") != std::string::npos);
  }
}

TEST_CASE("symmetry is exact over random cone samples") {
  SplitMix64 rng(101);
  for (const auto F : {CurvatureFunction::mean(), CurvatureFunction::gauss_root(),
                       CurvatureFunction::sigma_root(2)}) {
    for (int s = 0; s < 350; ++s) {
      auto k = random_cone_point(F, 3, rng);
      auto kp = k;
      std::swap(kp[0], kp[2]);
      std::swap(kp[1], kp[0]);
      REQUIRE(F.value(k) == F.value(kp));
    }
  }
}

TEST_CASE("monotonicity: every gradient component positive on 1000+ samples") {
  SplitMix64 rng(102);
  for (const auto F : {CurvatureFunction::mean(), CurvatureFunction::gauss_root(),
                       CurvatureFunction::sigma_root(2)}) {
    for (int s = 0; s < 400; ++s) {
      const auto k = random_cone_point(F, 3, rng);
      for (double gi : F.gradient(k)) REQUIRE(gi > 0.0);
    }
  }
}

TEST_CASE("concavity along midpoints on 1000+ samples") {
  SplitMix64 rng(103);
  for (const auto F : {CurvatureFunction::mean(), CurvatureFunction::gauss_root(),
                       CurvatureFunction::sigma_root(2)}) {
    for (int s = 0; s < 400; ++s) {
      const auto a = random_cone_point(F, 3, rng);
      const auto b = random_cone_point(F, 3, rng);
      std::vector<double> mid(3);
      for (int i = 0; i < 3; ++i) mid[static_cast<size_t>(i)] = 0.5 * (a[static_cast<size_t>(i)] + b[static_cast<size_t>(i)]);
      REQUIRE(F.value(mid) >= 0.5 * F.value(a) + 0.5 * F.value(b) - 1e-12);
    }
  }
}

TEST_CASE("boundary vanishing along rays into the cone boundary") {
  // gauss_root: (eps, 1, 1) exits the positive cone at eps = 0
  const auto gauss = CurvatureFunction::gauss_root();
  double prev = 1.0;
  for (double eps : {1e-2, 1e-4, 1e-7, 1e-10}) {
    std::vector<double> k{eps, 1.0, 1.0};
    const double v = gauss.value(k);
    REQUIRE(v < prev);
    prev = v;
  }
  REQUIRE(prev < 1e-3);

  // sigma_2 in n=3: sigma_2(1, 1, -1/2 + eps) = 2 eps -> 0
  const auto s2 = CurvatureFunction::sigma_root(2);
  for (double eps : {1e-2, 1e-4, 1e-6}) {
    std::vector<double> k{1.0, 1.0, -0.5 + eps};
    REQUIRE(s2.in_cone(k));
    REQUIRE(s2.value(k) == Catch::Approx(std::sqrt(2.0 * eps)).epsilon(1e-9));
  }

  SplitMix64 rng(104);
  for (int s = 0; s < 250; ++s) {
    std::vector<double> k{1e-8 * (1.0 + rng.uniform()), 0.5 + rng.uniform(), 0.5 + rng.uniform()};
    REQUIRE(gauss.value(k) < 1e-2);
  }
}

TEST_CASE("gradient matches central finite differences") {
  SplitMix64 rng(105);
  const double h = 1e-5;
  for (const auto F : {CurvatureFunction::mean(), CurvatureFunction::gauss_root(),
                       CurvatureFunction::sigma_root(2)}) {
    for (int s = 0; s < 60; ++s) {
      const auto k = random_cone_point(F, 3, rng);
      const auto g = F.gradient(k);
      for (int i = 0; i < 3; ++i) {
        auto kp = k, km = k;
        kp[static_cast<size_t>(i)] += h;
        km[static_cast<size_t>(i)] -= h;
        if (!F.in_cone(kp) || !F.in_cone(km)) continue;
        const double fd = (F.value(kp) - F.value(km)) / (2.0 * h);
        REQUIRE(std::abs(fd - g[static_cast<size_t>(i)]) <=
                1e-6 * std::max(1.0, std::abs(g[static_cast<size_t>(i)])));
      }
    }
  }
}

TEST_CASE("principal curvatures of simple pencils") {
  SplitMix64 rng(106);
  const Eigen::MatrixXd g = random_spd(4, rng);
  const auto id = principal_curvatures(g, g);
  for (int i = 0; i < 4; ++i) REQUIRE(id.kappa(i) == Catch::Approx(1.0).epsilon(1e-12));

  Eigen::MatrixXd h1(1, 1), g1(1, 1);
  h1 << 2.0;
  g1 << 4.0;
  REQUIRE(principal_curvatures(h1, g1).kappa(0) == Catch::Approx(0.5));
}

TEST_CASE("pencil eigenvalues match the characteristic-polynomial oracle") {
  SplitMix64 rng(107);
  for (int s = 0; s < 25; ++s) {
    const Eigen::MatrixXd g = random_spd(5, rng);
    const Eigen::MatrixXd h = random_sym(5, rng, 2.0);
    const auto pc = principal_curvatures(h, g);
    const auto roots = charpoly_eigenvalues(h, g);
    REQUIRE(roots.size() == 5);
    for (int i = 0; i < 5; ++i)
      REQUIRE(std::abs(pc.kappa(i) - roots[static_cast<size_t>(i)]) <= 1e-8);
    // reconstruction h = sum kappa_a (g xi_a)(g xi_a)^T
    Eigen::MatrixXd rec = Eigen::MatrixXd::Zero(5, 5);
    for (int a = 0; a < 5; ++a) {
      const Eigen::VectorXd eta = g * pc.frame.col(a);
      rec += pc.kappa(a) * eta * eta.transpose();
    }
    REQUIRE((rec - h).norm() <= 1e-10 * std::max(1.0, h.norm()));
  }
}

TEST_CASE("spectral shift identity is exact") {
  SplitMix64 rng(108);
  for (int s = 0; s < 100; ++s) {
    const Eigen::MatrixXd g = random_spd(5, rng);
    const Eigen::MatrixXd h = random_sym(5, rng);
    REQUIRE(minmax_shift_check(h, g, 0.0).ok);
    REQUIRE(minmax_shift_check(h, g, 0.3).ok);
    REQUIRE(minmax_shift_check(h, g, -1.7).ok);
  }
}

TEST_CASE("eigenvalues are monotone under positive semidefinite increments") {
  SplitMix64 rng(109);
  for (int s = 0; s < 100; ++s) {
    const Eigen::MatrixXd g = random_spd(5, rng);
    const Eigen::MatrixXd h = random_sym(5, rng);
    Eigen::MatrixXd b = random_sym(5, rng);
    const Eigen::MatrixXd d = b * b.transpose(); // PSD
    const auto base = principal_curvatures(h, g);
    const auto bumped = principal_curvatures(h + d, g);
    for (int i = 0; i < 5; ++i) REQUIRE(bumped.kappa(i) >= base.kappa(i) - 1e-10);
  }
}

TEST_CASE("congruence invariance of the pencil spectrum") {
  SplitMix64 rng(110);
  for (int s = 0; s < 40; ++s) {
    const Eigen::MatrixXd g = random_spd(4, rng);
    const Eigen::MatrixXd h = random_sym(4, rng);
    Eigen::MatrixXd A = random_sym(4, rng) + 3.0 * Eigen::MatrixXd::Identity(4, 4);
    const auto base = principal_curvatures(h, g);
    const auto cong = principal_curvatures(A.transpose() * h * A, A.transpose() * g * A);
    for (int i = 0; i < 4; ++i)
      REQUIRE(std::abs(base.kappa(i) - cong.kappa(i)) <=
              1e-8 * std::max(1.0, std::abs(base.kappa(i))));
  }
}

TEST_CASE("max-min characterisation: eigenvector subspaces are witnesses") {
  SplitMix64 rng(111);
  const int n = 4;
  const Eigen::MatrixXd g = random_spd(n, rng);
  const Eigen::MatrixXd h = random_sym(n, rng);
  const auto pc = principal_curvatures(h, g);
  for (int i = 0; i < n; ++i) {
    // E = span of the covectors g xi_1 .. g xi_{i-1}; on E-perp the smallest
    // Rayleigh quotient is exactly kappa_i
    Eigen::MatrixXd basis(n, n - i);
    for (int c = 0; c < n - i; ++c) basis.col(c) = pc.frame.col(i + c);
    const Eigen::MatrixXd hr = basis.transpose() * h * basis;
    const Eigen::MatrixXd gr = basis.transpose() * g * basis;
    const auto sub = principal_curvatures(hr, gr);
    REQUIRE(sub.kappa(0) == Catch::Approx(pc.kappa(i)).margin(1e-10));
    // and any random subspace of the same dimension cannot do better
    Eigen::MatrixXd rnd(n, n - i);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n - i; ++c) rnd(r, c) = rng.sym();
    const auto sub2 = principal_curvatures(
        Eigen::MatrixXd(rnd.transpose() * h * rnd), Eigen::MatrixXd(rnd.transpose() * g * rnd));
    REQUIRE(sub2.kappa(0) <= pc.kappa(i) + 1e-9);
  }
}

TEST_CASE("metric errors on non-SPD input") {
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(3, 3);
  Eigen::MatrixXd g = -Eigen::MatrixXd::Identity(3, 3);
  REQUIRE_THROWS_AS(principal_curvatures(h, g), SolverError);
}

TEST_CASE("closed-form small pencils agree with the general path") {
  SplitMix64 rng(112);
  for (int s = 0; s < 200; ++s) {
    TinyMat<double> h(2), g(2);
    Eigen::MatrixXd he(2, 2), ge(2, 2);
    const Eigen::MatrixXd gr = random_spd(2, rng);
    const Eigen::MatrixXd hr = random_sym(2, rng);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        h(i, j) = hr(i, j);
        g(i, j) = gr(i, j);
        he(i, j) = hr(i, j);
        ge(i, j) = gr(i, j);
      }
    const auto kap = pencil_eigenvalues(h, g);
    const auto ref = principal_curvatures(he, ge);
    REQUIRE(kap[0] == Catch::Approx(ref.kappa(0)).margin(1e-11));
    REQUIRE(kap[1] == Catch::Approx(ref.kappa(1)).margin(1e-11));
  }
}

TEST_CASE("matrix gradient matches finite differences of F(pencil)") {
  SplitMix64 rng(113);
  const double eps = 1e-6;
  for (const auto F : {CurvatureFunction::mean(), CurvatureFunction::gauss_root()}) {
    for (int s = 0; s < 40; ++s) {
      const Eigen::MatrixXd g = random_spd(3, rng);
      Eigen::MatrixXd h = random_spd(3, rng); // positive ensures cone membership
      const auto grad = matrix_gradient(F, h, g);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          Eigen::MatrixXd hp = h, hm = h;
          hp(i, j) += eps;
          hp(j, i) = hp(i, j);
          hm(i, j) -= eps;
          hm(j, i) = hm(i, j);
          auto val = [&](const Eigen::MatrixXd& hh) {
            const auto pc = principal_curvatures(hh, g);
            std::vector<double> kv(pc.kappa.data(), pc.kappa.data() + 3);
            return F.value(kv);
          };
          const double fd = (val(hp) - val(hm)) / (2.0 * eps);
          const double an = i == j ? grad.dF_dh(i, i) : grad.dF_dh(i, j) + grad.dF_dh(j, i);
          REQUIRE(std::abs(fd - an) <= 2e-5 * std::max(1.0, std::abs(an)));
        }
    }
  }
}

TEST_CASE("matrix gradient handles exactly degenerate spectra") {
  const auto F = CurvatureFunction::gauss_root();
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd h = 0.7 * Eigen::MatrixXd::Identity(2, 2);
  const auto grad = matrix_gradient(F, h, g);
  // F = kappa, dF/dh must be the isotropic projection with trace 1
  REQUIRE(grad.dF_dh(0, 0) == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(grad.dF_dh(1, 1) == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(grad.dF_dh(0, 1) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("cone margin along the diagonal direction") {
  const auto gauss = CurvatureFunction::gauss_root();
  std::vector<double> k{0.3, 1.0};
  REQUIRE(gauss.cone_margin(k) == Catch::Approx(0.3));
  const auto mean = CurvatureFunction::mean();
  REQUIRE(std::isinf(mean.cone_margin(k)));
  const auto s2 = CurvatureFunction::sigma_root(2);
  std::vector<double> k3{1.0, 1.0, 1.0};
  const double m = s2.cone_margin(k3);
  std::vector<double> probe{1.0 - m + 1e-9, 1.0 - m + 1e-9, 1.0 - m + 1e-9};
  REQUIRE(s2.in_cone(probe));
}
