#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "linein/fields.hpp"
#include "linein/geometry.hpp"
#include "linein/harness.hpp"
#include "linein/metric.hpp"

using namespace linein;

namespace {

const char* kPolar =
    "dim 2\ncoords r phi\ng[0][0] = 1\ng[1][1] = r^2\ndomain r in (0.5, 3)\ndomain phi in (0, 6)\n";

std::vector<Background> curved_backgrounds() {
  return {builtin("sphere", 2), builtin("sphere", 3), builtin("hyperbolic", 3),
          builtin("de_sitter_static", 4), builtin("schwarzschild", 4),
          load_metric_file(std::string(LINEIN_DATA_DIR) + "/tilted_3d.metric")};
}

}  // namespace

TEST_CASE("flat backgrounds have no connection and no curvature") {
  for (const char* name : {"flat_euclidean", "flat_minkowski"})
    for (int dim = 2; dim <= 4; ++dim) {
      const MetricSpec s = builtin_background(name, dim, {});
      for (const auto& p : sample_points(s, 3, 9)) {
        const CurvaturePack pack = curvature_pack(s, p);
        CHECK(max_abs(values(pack.gamma)) == 0.0);
        CHECK(max_abs(values(pack.riem_low)) < 1e-13);
        CHECK(max_abs(values(pack.ricci)) < 1e-13);
        CHECK(std::abs(pack.scalar.value()) < 1e-13);
        CHECK(max_abs(values(pack.nabla_riem)) < 1e-13);
      }
    }
}

TEST_CASE("Christoffel symbols in polar coordinates") {
  const MetricSpec s = parse_metric_file(kPolar);
  const std::vector<double> p{1.7, 0.4};
  const JetTensor gamma = christoffel(evaluate_metric_jet(s, p, 3));
  CHECK(gamma(0, 1, 1).value() == doctest::Approx(-1.7).epsilon(1e-14));
  CHECK(gamma(1, 0, 1).value() == doctest::Approx(1 / 1.7).epsilon(1e-14));
  CHECK(gamma(1, 1, 0).value() == doctest::Approx(1 / 1.7).epsilon(1e-14));
  CHECK(gamma(0, 0, 0).value() == 0.0);
  // derivative of Gamma^r_phiphi = -r along r is -1
  MultiIndex dr{};
  dr[0] = 1;
  CHECK(gamma(0, 1, 1).derivative(dr) == doctest::Approx(-1.0));
  // flat in disguise
  const CurvaturePack pack = curvature_pack(s, p);
  CHECK(max_abs(values(pack.riem_low)) < 1e-13);
}

TEST_CASE("sphere connection and curvature") {
  const MetricSpec s = builtin_background("sphere", 2, {{"r", 1.0}});
  const std::vector<double> p{0.8, 2.5};
  const CurvaturePack pack = curvature_pack(s, p);
  CHECK(pack.gamma(0, 1, 1).value() == doctest::Approx(-std::sin(0.8) * std::cos(0.8)).epsilon(1e-14));
  CHECK(pack.scalar.value() == doctest::Approx(2.0).epsilon(1e-13));
  for (int b = 0; b < 2; ++b)
    for (int d = 0; d < 2; ++d) CHECK(std::abs(pack.ricci(b, d).value() - pack.m.g(b, d)) < 1e-13);
  // R_0101 = r^2 sin^2 theta for the unit sphere
  CHECK(pack.riem_low(0, 1, 0, 1).value() == doctest::Approx(std::pow(std::sin(0.8), 2)).epsilon(1e-13));

  const MetricSpec s4 = builtin_background("sphere", 4, {{"r", 2.0}});
  const std::vector<double> q{1.0, 1.3, 1.6, 0.2};
  const CurvaturePack p4 = curvature_pack(s4, q);
  // Ricci = (n-1)/r^2 g
  for (int b = 0; b < 4; ++b)
    for (int d = 0; d < 4; ++d)
      CHECK(std::abs(p4.ricci(b, d).value() - 0.75 * p4.m.g(b, d)) < 1e-12);
  CHECK(constant_curvature_residual(p4, 0.25) < 1e-12);
}

TEST_CASE("Schwarzschild is Ricci flat but curved") {
  const MetricSpec s = builtin_background("schwarzschild", 4, {{"m", 1.0}});
  const std::vector<double> p{0.0, 4.0, 1.2, 0.5};
  const CurvaturePack pack = curvature_pack(s, p);
  CHECK(max_abs(values(pack.ricci)) < 1e-9);
  CHECK(max_abs(values(pack.riem_low)) > 1e-3);
  // Kretschmann scalar 48 m^2 / r^6
  double k = 0.0;
  const RealTensor r = values(pack.riem_low);
  const MetricAtPoint& m = pack.m;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d)
          k += r(a, b, c, d) * r(a, b, c, d) * m.g_inv(a, a) * m.g_inv(b, b) * m.g_inv(c, c) * m.g_inv(d, d);
  CHECK(k == doctest::Approx(48.0 / std::pow(4.0, 6)).epsilon(1e-12));
}

TEST_CASE("curvature pack invariants") {
  for (const auto& bg : curved_backgrounds())
    for (const auto& p : sample_points(bg.spec, 4, 17)) {
      const CurvaturePack pack = curvature_pack(bg.spec, p);
      const double scale = curvature_scale(pack);
      const RiemannSymmetryReport sym = check_riemann_symmetries(values(pack.riem_low));
      CHECK(sym.pair_antisymmetry <= 1e-11 * scale);
      CHECK(sym.first_bianchi <= 1e-11 * scale);
      const RealTensor ric = values(pack.ricci);
      for (int b = 0; b < bg.spec.dim; ++b)
        for (int d = 0; d < bg.spec.dim; ++d) CHECK(std::abs(ric(b, d) - ric(d, b)) <= 1e-11 * scale);
    }
}

TEST_CASE("metric compatibility") {
  for (const auto& bg : curved_backgrounds())
    for (const auto& p : sample_points(bg.spec, 3, 23)) {
      const CurvaturePack pack = curvature_pack(bg.spec, p);
      const RealTensor ng = values(covariant_derivative(pack.m.g_jet, pack.gamma));
      CHECK(ng.rank() == 3);
      CHECK(max_abs(ng) <= 1e-12 * std::max(1.0, max_abs(pack.m.g)));
    }
}

TEST_CASE("commutator of covariant derivatives reproduces the curvature") {
  // Freezes the sign convention: (nabla_a nabla_b - nabla_b nabla_a) X^c = R_ab^c_d X^d.
  std::size_t trials = 0;
  for (const auto& bg : curved_backgrounds())
    for (std::size_t i = 0; i < 3; ++i) {
      const auto pts = sample_points(bg.spec, 3, 31);
      Rng rng(derive_seed(7, bg.label, i));
      const std::vector<Expr> x = random_field(bg.spec, rng);
      const CurvaturePack pack = curvature_pack(bg.spec, pts[i]);
      const JetTensor xu =
          field_jets(x, bg.spec.params, pts[i], contravariant(1), kFieldJetOrder);
      const RealTensor dd = values(covariant_derivative(covariant_derivative(xu, pack.gamma), pack.gamma));
      const RealTensor xv = values(xu);
      const RealTensor rm = values(pack.riem_mixed);
      const int n = bg.spec.dim;
      double worst = 0.0, scale = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < n; ++c) {
            double rx = 0.0, mag = 0.0;
            for (int d = 0; d < n; ++d) {
              rx += rm(a, b, c, d) * xv(d);
              mag += std::abs(rm(a, b, c, d) * xv(d));
            }
            worst = std::max(worst, std::abs(dd(a, b, c) - dd(b, a, c) - rx));
            scale = std::max({scale, mag, std::abs(dd(a, b, c)) + std::abs(dd(b, a, c))});
          }
      CHECK(worst <= 1e-10 * scale);
      // the opposite sign is visibly wrong wherever the curvature term is nonzero
      if (scale > 1e-6) {
        double flipped = 0.0;
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) {
              double rx = 0.0;
              for (int d = 0; d < n; ++d) rx += rm(a, b, c, d) * xv(d);
              flipped = std::max(flipped, std::abs(dd(a, b, c) - dd(b, a, c) + rx));
            }
        CHECK(flipped > 1e-3 * scale);
      }
      ++trials;
    }
  CHECK(trials >= 18);
}

TEST_CASE("classification examples") {
  const MetricSpec s3 = builtin_background("sphere", 3, {{"r", 2.0}});
  const EinsteinCertificate c = classify_background(s3, sample_points(s3, 10, 42), 1e-9);
  CHECK(c.is_einstein);
  CHECK(c.lambda == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c.is_constant_curvature);
  CHECK(c.kappa == doctest::Approx(0.25).epsilon(1e-12));

  const MetricSpec schw = builtin_background("schwarzschild", 4, {{"m", 1.0}});
  const EinsteinCertificate cs = classify_background(schw, sample_points(schw, 10, 42), 1e-9);
  CHECK(cs.is_einstein);
  CHECK(std::abs(cs.lambda) < 1e-9);
  CHECK_FALSE(cs.is_constant_curvature);
  CHECK(cs.cc_residual > 1e-3);

  const MetricSpec mink = builtin_background("flat_minkowski", 4, {});
  const EinsteinCertificate cm = classify_background(mink, sample_points(mink, 5, 42), 1e-9);
  CHECK(cm.is_einstein);
  CHECK(cm.is_constant_curvature);
  CHECK(cm.lambda == 0.0);
  CHECK(cm.kappa == 0.0);

  const MetricSpec hyp = builtin_background("hyperbolic", 3, {{"r", 1.0}});
  const EinsteinCertificate ch = classify_background(hyp, sample_points(hyp, 10, 42), 1e-9);
  CHECK(ch.lambda == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(ch.kappa == doctest::Approx(-1.0).epsilon(1e-12));

  const Background warped = load_metric_file(std::string(LINEIN_DATA_DIR) + "/warped_plane.metric");
  const EinsteinCertificate cw = classify_background(warped.spec, sample_points(warped.spec, 10, 42), 1e-9);
  CHECK_FALSE(cw.is_einstein);
  CHECK_FALSE(cw.is_constant_curvature);
}

TEST_CASE("Lie derivative of the metric") {
  const MetricSpec flat = builtin_background("flat_euclidean", 2, {});
  const std::vector<double> p{0.3, -0.6};
  const std::vector<Expr> translation{Expr::number(2.0), Expr::number(-1.0)};
  CHECK(max_abs(values(lie_derivative_metric(translation, flat, p))) == 0.0);
  const std::vector<Expr> rotation{-Expr::coord(1), Expr::coord(0)};
  const JetTensor lr = lie_derivative_metric(rotation, flat, p);
  CHECK(max_abs(values(lr)) == 0.0);
  for (std::size_t k = 0; k < lr.size(); ++k)
    for (double c : lr[k].coeffs()) CHECK(c == 0.0);

  // sphere rotations about the axis are Killing; X_phi = r^2 sin^2 theta
  const MetricSpec s2 = builtin_background("sphere", 2, {{"r", 1.3}});
  const std::vector<Expr> axial{Expr::number(0.0), s2.component(1, 1)};
  const std::vector<double> q{1.0, 2.0};
  CHECK(max_abs(values(lie_derivative_metric(axial, s2, q))) < 1e-14);

  // a dilation is not
  const std::vector<Expr> dilation{Expr::coord(0), Expr::coord(1)};
  const RealTensor ld = values(lie_derivative_metric(dilation, flat, p));
  CHECK(ld(0, 0) == 2.0);
  CHECK(ld(1, 1) == 2.0);
  CHECK(ld(0, 1) == 0.0);
}

TEST_CASE("curvature pack errors") {
  const MetricSpec s = builtin_background("sphere", 2, {{"r", 1.0}});
  const std::vector<double> p{1.0, 1.0};
  CHECK_THROWS_AS(curvature_pack(s, p, 2), InsufficientJetOrder);
  const std::vector<double> out{0.05, 1.0};
  CHECK_THROWS_AS(curvature_pack(s, out), OutsideDomain);
}
