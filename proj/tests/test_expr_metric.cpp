#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "linein/errors.hpp"
#include "linein/expr.hpp"
#include "linein/fields.hpp"
#include "linein/geometry.hpp"
#include "linein/metric.hpp"

using namespace linein;

namespace {

const char* kSphereFile = R"(# round 2-sphere
dim 2
coords theta phi
param r = 1.5
g[0][0] = r^2
g[1][1] = r^2 * sin(theta)^2
domain theta in (0.2, 2.94)
domain phi in (0, 6.28)
)";

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("expression precedence and associativity") {
  const std::vector<std::string> c{"x"};
  const std::vector<double> p{2.0};
  CHECK(evaluate(parse_expression("-x^2", c, {}), {}, p) == -4.0);
  CHECK(evaluate(parse_expression("2^3^2", c, {}), {}, p) == 512.0);
  CHECK(evaluate(parse_expression("1 - 2 - 3", c, {}), {}, p) == -4.0);
  CHECK(evaluate(parse_expression("12 / 3 / 2", c, {}), {}, p) == 2.0);
  CHECK(evaluate(parse_expression("(1 + x) * 3", c, {}), {}, p) == 9.0);
  CHECK(evaluate(parse_expression("2*-x", c, {}), {}, p) == -4.0);
  CHECK(evaluate(parse_expression("1.5e1 + .5", c, {}), {}, p) == 15.5);
  CHECK(evaluate(parse_expression("sqrt(exp(0)) + log(1) + cos(0)", c, {}), {}, p) == 2.0);
}

TEST_CASE("expression errors carry positions") {
  const std::vector<std::string> c{"x", "y"};
  CHECK_THROWS_AS(parse_expression("x +", c, {}), SyntaxError);
  CHECK_THROWS_AS(parse_expression("(x", c, {}), SyntaxError);
  CHECK_THROWS_AS(parse_expression("x y", c, {}), SyntaxError);
  CHECK_THROWS_AS(parse_expression("q + 1", c, {}), UnknownSymbol);
  CHECK_THROWS_AS(parse_expression("tan(x)", c, {}), UnknownSymbol);
  try {
    parse_expression("x * * y", c, {}, 4, 10);
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    CHECK(std::string(e.what()).find("column") != std::string::npos);
  }
  const std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS_AS(evaluate(parse_expression("1/x", c, {}), {}, zero), EvaluationSingular);
  CHECK_THROWS_AS(evaluate(parse_expression("sqrt(x - 1)", c, {}), {}, zero), EvaluationSingular);
}

TEST_CASE("symbolic derivative and printing round trip") {
  const std::vector<std::string> c{"x", "y"};
  const Expr e = parse_expression("x^3*sin(y) + exp(x*y)/(1 + y^2)", c, {});
  const std::vector<double> p{0.4, -0.7};
  for (int v = 0; v < 2; ++v) {
    MultiIndex a{};
    a[v] = 1;
    CHECK(evaluate(differentiate(e, v), {}, p) ==
          doctest::Approx(finite_difference(e, {}, p, a)).epsilon(1e-9));
  }
  const Expr back = parse_expression(to_string(e, c), c, {});
  CHECK(evaluate(back, {}, p) == evaluate(e, {}, p));
}

TEST_CASE("parse the 2-sphere file") {
  const MetricSpec s = parse_metric_file(kSphereFile);
  CHECK(s.dim == 2);
  CHECK(s.coord_names == std::vector<std::string>{"theta", "phi"});
  const std::vector<double> p{1.0, 0.5};
  CHECK(evaluate(s.component(0, 0), s.params, p) == doctest::Approx(2.25));
  CHECK(evaluate(s.component(1, 1), s.params, p) == doctest::Approx(2.25 * std::pow(std::sin(1.0), 2)));
  CHECK(s.component(0, 1).is_number(0.0));
  CHECK(s.safe_domain[0].lo == 0.2);
  CHECK(s.safe_domain[1].hi == 6.28);
}

TEST_CASE("minimal flat file") {
  const MetricSpec s =
      parse_metric_file("dim 2\ncoords x y\ng[0][0]=1\ng[1][1]=1\ndomain x in (-1, 1)\ndomain y in (-1, 1)\n");
  const std::vector<double> p{0.1, 0.2};
  const MetricAtPoint m = evaluate_metric_jet(s, p, 2);
  CHECK(m.g(0, 0) == 1.0);
  CHECK(m.g(0, 1) == 0.0);
  CHECK(m.g(1, 1) == 1.0);
}

TEST_CASE("semantic errors") {
  const std::string head = "dim 2\ncoords x y\ndomain x in (-1, 1)\ndomain y in (-1, 1)\n";
  CHECK_THROWS_AS(parse_metric_file(head + "g[0][1]=x\ng[1][0]=y\n"), SemanticError);
  CHECK_NOTHROW(parse_metric_file(head + "g[0][0]=1\ng[1][1]=1\ng[0][1]=x\ng[1][0]= x\n"));
  CHECK_THROWS_AS(parse_metric_file(head + "g[0][0]=1\ng[0][0]=2\n"), SemanticError);
  CHECK_THROWS_AS(parse_metric_file(head + "g[0][0]=w\n"), SemanticError);
  CHECK_THROWS_AS(parse_metric_file(head + "g[2][0]=1\n"), SemanticError);
  CHECK_THROWS_AS(parse_metric_file("dim 2\ncoords x y\ndomain x in (1, -1)\ndomain y in (-1, 1)\n"),
                  SemanticError);
  CHECK_THROWS_AS(parse_metric_file("dim 2\ncoords x y\ndomain x in (-1, 1)\n"), SemanticError);
  CHECK_THROWS_AS(parse_metric_file("dim 2\ncoords x\n"), SemanticError);
  CHECK_THROWS_AS(parse_metric_file("coords x y\n"), SemanticError);
  CHECK_THROWS_AS(parse_metric_file(head + "g[0][0] = 1 +\n"), SyntaxError);
  CHECK_THROWS_AS(parse_metric_file(head + "metric is flat\n"), SyntaxError);
}

TEST_CASE("builtin catalog") {
  const MetricSpec flat = builtin_background("flat_euclidean", 3, {});
  const std::vector<double> p{0.1, -0.3, 0.5};
  const MetricAtPoint m = evaluate_metric_jet(flat, p, 3);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      CHECK(m.g(a, b) == (a == b ? 1.0 : 0.0));
      CHECK(m.g_inv(a, b) == (a == b ? 1.0 : 0.0));
      for (std::size_t r = 1; r < m.g_jet(a, b).layout().size(); ++r) CHECK(m.g_jet(a, b).coeffs()[r] == 0.0);
    }

  const MetricSpec s2 = builtin_background("sphere", 2, {{"r", 1.0}});
  CHECK(s2.safe_domain[0].lo == 0.2);
  CHECK(s2.safe_domain[0].hi == 2.94);
  CHECK(s2.safe_domain[1].lo == 0.0);
  CHECK(s2.safe_domain[1].hi == 6.28);
  const std::vector<double> eq{M_PI / 2, 1.0};
  const MetricAtPoint ms = evaluate_metric_jet(s2, eq, 3);
  CHECK(ms.g(0, 0) == doctest::Approx(1.0));
  CHECK(ms.g(1, 1) == doctest::Approx(1.0));
  MultiIndex dtheta{};
  dtheta[0] = 1;
  CHECK(std::abs(ms.g_jet(1, 1).derivative(dtheta)) < 1e-15);

  const MetricSpec schw = builtin_background("schwarzschild", 4, {{"m", 1.0}});
  CHECK(schw.safe_domain[1].lo == 3.0);
  CHECK(schw.safe_domain[1].hi == 10.0);
  const std::vector<double> near{0.0, 2.000001, 1.0, 1.0};
  CHECK_THROWS_AS(evaluate_metric_jet(schw, near, 2), OutsideDomain);
  const std::vector<double> q{0.0, 4.0, 1.2, 0.5};
  const MetricAtPoint mq = evaluate_metric_jet(schw, q, 2);
  CHECK(mq.g(0, 0) == doctest::Approx(-0.5));
  CHECK(mq.g(1, 1) == doctest::Approx(2.0));
  CHECK(mq.g(3, 3) == doctest::Approx(16 * std::pow(std::sin(1.2), 2)));

  CHECK_THROWS_AS(builtin_background("torus", 2, {}), UnknownBackground);
  CHECK_THROWS_AS(builtin_background("schwarzschild", 3, {{"m", 1.0}}), BadDimension);
  CHECK_THROWS_AS(builtin_background("sphere", 2, {}), MissingParam);
}

TEST_CASE("g times g_inv is the identity") {
  for (const auto& info : builtin_catalog()) {
    const int dim = std::max(info.min_dim, std::min(4, info.max_dim));
    const MetricSpec s = builtin_background(info.name, dim, info.default_params);
    for (const auto& p : sample_points(s, 5, 3)) {
      const MetricAtPoint m = evaluate_metric_jet(s, p, 2);
      double scale = 0.0;
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) scale = std::max(scale, std::abs(m.g(a, b)) * std::abs(m.g_inv(a, b)));
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) {
          double acc = 0.0;
          for (int c = 0; c < dim; ++c) acc += m.g(a, c) * m.g_inv(c, b);
          CHECK(std::abs(acc - (a == b ? 1.0 : 0.0)) <= 1e-12 * std::max(1.0, scale));
        }
    }
  }
}

TEST_CASE("degenerate metric is rejected") {
  const MetricSpec s = parse_metric_file(
      "dim 2\ncoords x y\ng[0][0]=1\ng[0][1]=1\ng[1][1]=1\ndomain x in (-1, 1)\ndomain y in (-1, 1)\n");
  const std::vector<double> p{0.0, 0.0};
  CHECK_THROWS_AS(evaluate_metric_jet(s, p, 2), DegenerateMetric);
}

TEST_CASE("DSL round trip of every builtin") {
  for (const auto& info : builtin_catalog())
    for (int dim = std::max(2, info.min_dim); dim <= std::min(4, info.max_dim); ++dim) {
      const MetricSpec s = builtin_background(info.name, dim, info.default_params);
      const MetricSpec back = parse_metric_file(to_dsl(s));
      CHECK(back.dim == s.dim);
      CHECK(back.signature_hint == s.signature_hint);
      for (const auto& p : sample_points(s, 10, 5)) {
        const MetricAtPoint a = evaluate_metric_jet(s, p, 3);
        const MetricAtPoint b = evaluate_metric_jet(back, p, 3);
        for (std::size_t k = 0; k < a.g_jet.size(); ++k) {
          const auto ca = a.g_jet[k].coeffs();
          const auto cb = b.g_jet[k].coeffs();
          for (std::size_t r = 0; r < ca.size(); ++r)
            CHECK(std::abs(ca[r] - cb[r]) <= 1e-14 * std::max(1.0, std::abs(ca[r])));
        }
      }
    }
}

TEST_CASE("builtins classify with their catalog status") {
  for (const auto& info : builtin_catalog())
    for (int dim = std::max(2, info.min_dim); dim <= std::min(4, info.max_dim); ++dim) {
      const MetricSpec s = builtin_background(info.name, dim, info.default_params);
      const EinsteinCertificate c = classify_background(s, sample_points(s, 20, 42), 1e-9);
      CAPTURE(info.name);
      CAPTURE(dim);
      CHECK(c.is_einstein);
      CHECK(c.is_constant_curvature == (info.status != BackgroundStatus::EinsteinOnly));
    }
}

TEST_CASE("shipped metric files parse") {
  for (const char* f : {"sphere2.metric", "warped_plane.metric", "tilted_3d.metric"}) {
    const std::string text = read_file(std::string(LINEIN_DATA_DIR) + "/" + f);
    REQUIRE(!text.empty());
    CHECK_NOTHROW(parse_metric_file(text));
  }
}

TEST_CASE("UTF-8 identifiers") {
  const MetricSpec s = parse_metric_file(
      "dim 2\ncoords θ φ\ng[0][0] = 1\ng[1][1] = sin(θ)^2\ndomain θ in (0.2, 2.9)\ndomain φ in (0, 6)\n");
  const std::vector<double> p{1.0, 0.0};
  CHECK(evaluate(s.component(1, 1), s.params, p) == doctest::Approx(std::pow(std::sin(1.0), 2)));
}
