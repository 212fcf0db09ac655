#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "linein/fields.hpp"
#include "linein/harness.hpp"
#include "linein/operators.hpp"

using namespace linein;

namespace {

std::string data(const char* f) { return std::string(LINEIN_DATA_DIR) + "/" + f; }

std::vector<Expr> zeros(int n) { return std::vector<Expr>(static_cast<std::size_t>(n), Expr::number(0.0)); }

struct Case {
  Background bg;
  bool einstein;
  bool constant_curvature;
};

std::vector<Case> cases() {
  return {{builtin("flat_euclidean", 3), true, true},
          {builtin("flat_minkowski", 3), true, true},
          {builtin("sphere", 2), true, true},
          {builtin("sphere", 3), true, true},
          {builtin("hyperbolic", 4), true, true},
          {builtin("de_sitter_static", 4), true, true},
          {builtin("schwarzschild", 4), true, false},
          {load_metric_file(data("warped_plane.metric")), false, false},
          {load_metric_file(data("tilted_3d.metric")), false, false}};
}

// (C h)_abcd on a flat Cartesian background, from central differences of the
// component expressions only: S(a, c, b, d) = d_a d_c h_bd.
RealTensor brute_force_calabi(const std::vector<Expr>& h, int n, std::span<const double> p) {
  RealTensor S(n, covariant(4), 0.0);
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c)
      for (int b = 0; b < n; ++b)
        for (int d = 0; d < n; ++d) {
          MultiIndex alpha{};
          alpha[a] += 1;
          alpha[c] += 1;
          S(a, c, b, d) = finite_difference(h[b * n + d], {}, p, alpha);
        }
  RealTensor C(n, covariant(4), 0.0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d)
          C(a, b, c, d) = S(a, c, b, d) - S(b, c, a, d) - S(a, d, b, c) + S(b, d, a, c);
  return C;
}

}  // namespace

TEST_CASE("Killing operator examples") {
  const MetricSpec flat = builtin_background("flat_euclidean", 2, {});
  const std::vector<double> p{0.2, 0.1};
  const std::vector<Expr> constant{Expr::number(1.5), Expr::number(-0.5)};
  CHECK(max_abs(values(killing_K(constant, flat, p).h)) == 0.0);

  const std::vector<Expr> strain{Expr::coord(0), Expr::number(0.0)};
  const KillingData kd = killing_K(strain, flat, p);
  const RealTensor h = values(kd.h);
  CHECK(h(0, 0) == 1.0);
  CHECK(h(0, 1) == 0.0);
  CHECK(h(1, 1) == 0.0);
  for (double c : kd.h(0, 0).coeffs().subspan(1)) CHECK(c == 0.0);
  CHECK(max_abs(values(kd.mu)) == 0.0);

  const std::vector<Expr> rotation{-Expr::coord(1), Expr::coord(0)};
  const KillingData rot = killing_K(rotation, flat, p);
  CHECK(max_abs(values(rot.h)) == 0.0);
  // mu_01 = (d_0 X_1 - d_1 X_0) / 2 = 1
  CHECK(values(rot.mu)(0, 1) == 1.0);
  CHECK(values(rot.mu)(1, 0) == -1.0);
}

TEST_CASE("Killing data invariants and the gauge identity") {
  for (const auto& c : cases()) {
    const MetricSpec& s = c.bg.spec;
    for (const auto& pt : sample_points(s, 3, 5)) {
      Rng rng(derive_seed(11, c.bg.label, 0));
      const auto X = random_field(s, rng);
      const CurvaturePack pack = curvature_pack(s, pt);
      const KillingData kd = killing_K(X, pack, s.params);
      const RealTensor h = values(kd.h), mu = values(kd.mu);
      const RealTensor full = values(covariant_derivative(kd.X_low, pack.gamma));
      const double scale = std::max(1.0, max_abs(full));
      CHECK(max_abs_difference(h + mu, full) <= 1e-13 * scale);
      CHECK(max_abs_difference(h, permute_slots(h, {1, 0})) <= 1e-13 * scale);
      CHECK(max_abs_difference(mu, -1.0 * permute_slots(mu, {1, 0})) <= 1e-13 * scale);
      // X^a carries the raised index
      const RealTensor up = adjust_index(values(kd.X_low), 0, IndexMove::Raise, pack.m);
      CHECK(max_abs_difference(up, values(kd.X_up)) <= 1e-13 * std::max(1.0, max_abs(up)));
      // L_X g = 2 nabla_(a X_b), from the coordinate formula
      const RealTensor lie = values(lie_derivative_metric(X, s, pt));
      CHECK(max_abs_difference(lie, 2.0 * h) <= 1e-10 * std::max(1.0, max_abs(lie)));
    }
  }
}

TEST_CASE("sphere: Killing fields give zero deformation") {
  // X_phi = r^2 sin^2 theta is the axial rotation
  const MetricSpec s = builtin_background("sphere", 2, {{"r", 1.0}});
  const std::vector<Expr> axial{Expr::number(0.0), s.component(1, 1)};
  const std::vector<double> p{1.2, 0.3};
  const CurvaturePack pack = curvature_pack(s, p);
  const KillingData kd = killing_K(axial, pack, s.params);
  CHECK(max_abs(values(kd.h)) < 1e-14);
  // and nabla_(a X_b) is half the Lie derivative for a non-Killing field too
  const std::vector<Expr> tilt{Expr::call(Function::Sin, Expr::coord(0)) * Expr::call(Function::Cos, Expr::coord(1)),
                               Expr::number(0.0)};
  const RealTensor h = values(killing_K(tilt, pack, s.params).h);
  const RealTensor lie = values(lie_derivative_metric(tilt, s, p));
  CHECK(max_abs_difference(h, 0.5 * lie) < 1e-10);
}

TEST_CASE("perturbation invariants") {
  const MetricSpec s = builtin_background("schwarzschild", 4, {{"m", 1.0}});
  const auto pt = sample_points(s, 1, 3).front();
  const CurvaturePack pack = curvature_pack(s, pt);
  Rng rng(99);
  const Perturbation p = make_perturbation(random_symmetric(s, rng), pack, s.params);
  const RealTensor h = values(p.h), hu = values(p.h_up);
  double trace = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) trace += hu(a, b) * pack.m.g(a, b);
  CHECK(std::abs(trace - p.trace.value()) <= 1e-13 * std::max(1.0, std::abs(trace)));
  CHECK(max_abs_difference(h, permute_slots(h, {1, 0})) == 0.0);
  CHECK(p.source == PerturbationSource::Expressions);

  std::vector<Expr> asym = zeros(16);
  asym[1] = Expr::number(1.0);
  CHECK_THROWS(make_perturbation(asym, pack, s.params));
}

TEST_CASE("Calabi operator on flat backgrounds") {
  const MetricSpec flat = builtin_background("flat_euclidean", 2, {});
  const std::vector<double> p{0.3, -0.4};
  const CurvaturePack pack = curvature_pack(flat, p);

  std::vector<Expr> affine = zeros(4);
  affine[0] = Expr::number(1.0) + Expr::coord(0) * Expr::number(2.0);
  affine[1] = affine[2] = Expr::coord(1) - Expr::coord(0);
  affine[3] = Expr::number(-0.5) * Expr::coord(1);
  CHECK(max_abs(calabi_C(make_perturbation(affine, pack, flat.params), pack)) == 0.0);

  // h_xx = y^2; in two dimensions the only independent entry is C_0101 = d_y d_y h_xx
  std::vector<Expr> ysq = zeros(4);
  ysq[0] = Expr::coord(1) * Expr::coord(1);
  const RealTensor C = calabi_C(make_perturbation(ysq, pack, flat.params), pack);
  const RealTensor oracle = brute_force_calabi(ysq, 2, p);
  CHECK(C(0, 1, 0, 1) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(C(1, 0, 1, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(C(0, 1, 1, 0) == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(max_abs_difference(C, oracle) < 1e-6);
  // the same component placed on h_yy is annihilated
  std::vector<Expr> yy = zeros(4);
  yy[3] = Expr::coord(1) * Expr::coord(1);
  CHECK(max_abs(calabi_C(make_perturbation(yy, pack, flat.params), pack)) == 0.0);

  // a generic polynomial h on a 3d flat chart
  const MetricSpec f3 = builtin_background("flat_euclidean", 3, {});
  const std::vector<double> q{0.1, 0.5, -0.2};
  Rng rng(5);
  const auto h3 = random_symmetric(f3, rng);
  const CurvaturePack p3 = curvature_pack(f3, q);
  const Perturbation pert = make_perturbation(h3, p3, f3.params);
  const RealTensor C3 = calabi_C(pert, p3);
  CHECK(max_abs_difference(C3, brute_force_calabi(h3, 3, q)) < 1e-6 * std::max(1.0, max_abs(C3)));
  const RiemannSymmetryReport sym = check_riemann_symmetries(C3);
  CHECK(sym.pair_antisymmetry < 1e-10 * max_abs(C3));
  CHECK(sym.first_bianchi < 1e-10 * max_abs(C3));
  CHECK(sym.pair_interchange < 1e-12 * max_abs(C3));
  const LinearisedRiemann lr = linearised_riemann(pert, p3);
  CHECK(max_abs_difference(lr.bracket, C3) == 0.0);
  // flat: linearised Ricci is -1/2 g^ac (C h)_abcd
  const RealTensor ric = linearised_ricci(pert, p3);
  const RealTensor P = operator_P(pert, p3).value;
  CHECK(max_abs_difference(ric, -0.5 * P) < 1e-14 * std::max(1.0, max_abs(P)));
}

TEST_CASE("Calabi of a Killing perturbation matches the closed form everywhere") {
  for (const auto& c : cases()) {
    const MetricSpec& s = c.bg.spec;
    std::size_t k = 0;
    for (const auto& pt : sample_points(s, 3, 13)) {
      const CurvaturePack pack = curvature_pack(s, pt);
      Rng rng(derive_seed(13, c.bg.label, k++));
      const KillingData kd = killing_K(random_field(s, rng), pack, s.params);
      const Perturbation p = make_perturbation(kd, pack.m);
      CHECK(p.source == PerturbationSource::KillingGenerated);
      const CalabiParts parts = calabi_parts(p, pack);
      const CkParts ck = ck_parts(kd, pack);
      const RealTensor C = calabi_C(p, pack);
      CAPTURE(c.bg.label);
      CHECK(max_abs_difference(C, ck.value) <= 1e-10 * (parts.scale() + ck.scale()));
      CHECK(max_abs_difference(ck.value, ck_formula(kd, pack)) == 0.0);
      if (c.constant_curvature) CHECK(max_abs(ck.value) <= 1e-10 * std::max(ck.scale(), 1e-300));
    }
  }
}

TEST_CASE("closed form on flat and round backgrounds is zero") {
  const MetricSpec flat = builtin_background("flat_minkowski", 4, {});
  const auto pt = sample_points(flat, 1, 1).front();
  const CurvaturePack pack = curvature_pack(flat, pt);
  Rng rng(1);
  const KillingData kd = killing_K(random_field(flat, rng), pack, flat.params);
  CHECK(max_abs(ck_formula(kd, pack)) == 0.0);
}

TEST_CASE("Schwarzschild closed form is visibly nonzero") {
  const MetricSpec s = builtin_background("schwarzschild", 4, {{"m", 1.0}});
  double best = 0.0;
  for (const auto& pt : sample_points(s, 4, 42)) {
    const CurvaturePack pack = curvature_pack(s, pt);
    for (int k = 0; k < 5; ++k) {
      Rng rng(derive_seed(42, "ck", static_cast<std::uint64_t>(k)));
      const CkParts ck = ck_parts(killing_K(random_field(s, rng), pack, s.params), pack);
      best = std::max(best, max_abs(ck.value) / ck.scale());
    }
  }
  CHECK(best > 1e-4);
}

TEST_CASE("deformation operator: both routes, kernel and witnesses") {
  for (const auto& c : cases()) {
    const MetricSpec& s = c.bg.spec;
    CAPTURE(c.bg.label);
    std::size_t k = 0;
    double witness = 0.0;
    for (const auto& pt : sample_points(s, 4, 21)) {
      const CurvaturePack pack = curvature_pack(s, pt);
      Rng rng(derive_seed(21, c.bg.label, k++));
      const KillingData kd = killing_K(random_field(s, rng), pack, s.params);
      const OperatorP pk = operator_P(make_perturbation(kd, pack.m), pack, false);
      CHECK(pk.residual <= 1e-10 * pk.scale);
      if (c.einstein) CHECK(max_abs(pk.value) <= 1e-9 * pk.scale);
      witness = std::max(witness, max_abs(pk.value) / pk.scale);

      const Perturbation ph = make_perturbation(random_symmetric(s, rng), pack, s.params);
      const OperatorP pg = operator_P(ph, pack);
      CHECK(pg.residual <= 1e-10 * pg.scale);
      CHECK(max_abs(pg.value) > 1e-5 * pg.scale);
    }
    if (!c.einstein) CHECK(witness > 1e-5);
  }
}

TEST_CASE("constant multiples of a flat metric are in the kernel") {
  for (const char* name : {"flat_euclidean", "flat_minkowski"}) {
    const MetricSpec s = builtin_background(name, 3, {});
    const auto pt = sample_points(s, 1, 2).front();
    const CurvaturePack pack = curvature_pack(s, pt);
    const OperatorP P = operator_P(make_perturbation(scaled_metric_expressions(s, 0.7), pack, s.params), pack);
    CHECK(max_abs(P.value) == 0.0);
  }
}

TEST_CASE("linearised Ricci in a gauge direction is lambda h") {
  for (const auto& c : cases()) {
    if (!c.einstein) continue;
    const MetricSpec& s = c.bg.spec;
    const auto pts = sample_points(s, 3, 8);
    const EinsteinCertificate cert = classify_background(s, pts, 1e-9);
    for (const auto& pt : pts) {
      const CurvaturePack pack = curvature_pack(s, pt);
      Rng rng(derive_seed(8, c.bg.label, 0));
      const KillingData kd = killing_K(random_field(s, rng), pack, s.params);
      const Perturbation p = make_perturbation(kd, pack.m);
      const RealTensor ric = linearised_ricci(p, pack);
      const RealTensor h = values(p.h);
      const double scale = calabi_parts(p, pack).scale() + max_abs(values(pack.ricci)) * max_abs(h) +
                           std::abs(cert.lambda) * max_abs(h);
      CAPTURE(c.bg.label);
      CHECK(max_abs_difference(ric, cert.lambda * h) <= 1e-9 * scale);
    }
  }
}

TEST_CASE("trace identities and output symmetries") {
  for (const auto& c : cases()) {
    const MetricSpec& s = c.bg.spec;
    CAPTURE(c.bg.label);
    std::size_t k = 0;
    for (const auto& pt : sample_points(s, 3, 33)) {
      const CurvaturePack pack = curvature_pack(s, pt);
      Rng rng(derive_seed(33, c.bg.label, k++));
      const Perturbation p = make_perturbation(random_symmetric(s, rng), pack, s.params);
      const IdentityResidual t1 = ricci_trace_identity(p, pack);
      CHECK(t1.relative() <= 1e-10);
      const KillingData kd = killing_K(random_field(s, rng), pack, s.params);
      const IdentityResidual t2 = killing_trace_identity(kd, pack);
      CHECK(t2.relative() <= 1e-10);
      if (c.bg.label.rfind("flat", 0) == 0) {
        CHECK(t1.residual == 0.0);
        CHECK(t2.residual == 0.0);
      }

      const CalabiParts parts = calabi_parts(p, pack);
      const RealTensor C = calabi_C(p, pack);
      const RiemannSymmetryReport sc = check_riemann_symmetries(C);
      CHECK(sc.pair_antisymmetry <= 1e-10 * parts.scale());
      CHECK(sc.first_bianchi <= 1e-10 * parts.scale());
      const LinearisedRiemann lr = linearised_riemann(p, pack);
      CHECK(lr.path_residual <= 1e-10 * lr.scale);
      const RiemannSymmetryReport sl = check_riemann_symmetries(lr.bracket);
      CHECK(sl.pair_antisymmetry <= 1e-10 * lr.scale);
      CHECK(sl.first_bianchi <= 1e-10 * lr.scale);
      CHECK(sl.pair_interchange <= 1e-10 * lr.scale);
    }
  }
}

TEST_CASE("insufficient field jets are rejected") {
  const MetricSpec s = builtin_background("sphere", 2, {{"r", 1.0}});
  const std::vector<double> p{1.0, 1.0};
  const CurvaturePack pack = curvature_pack(s, p);
  Rng rng(3);
  const Perturbation shallow = make_perturbation(random_symmetric(s, rng), pack, s.params, 1);
  CHECK_THROWS_AS(calabi_C(shallow, pack), InsufficientJetOrder);
  const KillingData kd = killing_K(random_field(s, rng), pack, s.params, 2);
  CHECK_THROWS_AS(calabi_C(make_perturbation(kd, pack.m), pack), InsufficientJetOrder);
}
