#pragma once

// Metric definitions: the line-oriented DSL, the builtin background catalog,
// and evaluation of metric components as jets at a chart point.
//
// DSL grammar ('#' starts a comment):
//   dim <n>
//   coords <name> ... <name>
//   param <name> = <real>
//   g[<i>][<j>] = <expression>        (zero-based, mirrored to g[j][i])
//   domain <coord> in (<lo>, <hi>)    (one per coordinate, required)
//   signature <p> <q>                 (optional: p positive, q negative)
//   name <identifier>                 (optional)

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "linein/expr.hpp"
#include "linein/tensor.hpp"

namespace linein {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return x > lo && x < hi; }
  double center() const { return 0.5 * (lo + hi); }
  double half_width() const { return 0.5 * (hi - lo); }
};

/// (positive, negative) eigenvalue counts.
using Signature = std::pair<int, int>;

struct MetricSpec {
  std::string name;
  int dim = 0;
  std::vector<std::string> coord_names;
  ParamTable params;
  /// dim*dim row-major; (a,b) and (b,a) hold the same expression.
  std::vector<Expr> components;
  std::vector<Interval> safe_domain;
  std::optional<Signature> signature_hint;

  const Expr& component(int a, int b) const { return components[a * dim + b]; }
  void set_component(int a, int b, const Expr& e) {
    components[a * dim + b] = e;
    components[b * dim + a] = e;
  }
  bool contains(std::span<const double> point) const;
};

/// An empty dim-dimensional spec (all components zero).
MetricSpec make_metric_spec(std::string name, std::vector<std::string> coords,
                            std::vector<Interval> domain, ParamTable params = {});

MetricSpec parse_metric_file(std::string_view text);
/// DSL text that parse_metric_file reads back to an equivalent spec.
std::string to_dsl(const MetricSpec& spec);

// ---------------------------------------------------------------------------

enum class BackgroundStatus { Flat, ConstantCurvature, EinsteinOnly, Generic };

struct BackgroundInfo {
  std::string name;
  int min_dim = 2;
  int max_dim = 5;
  std::vector<std::string> required_params;
  ParamTable default_params;
  BackgroundStatus status = BackgroundStatus::Generic;
  std::string description;
};

const std::vector<BackgroundInfo>& builtin_catalog();
const BackgroundInfo& builtin_info(std::string_view name);

MetricSpec builtin_background(std::string_view name, int dim, const ParamTable& params);

// ---------------------------------------------------------------------------

struct MetricAtPoint {
  std::vector<double> point;
  RealTensor g;
  RealTensor g_inv;
  JetTensor g_jet;
  JetTensor g_inv_jet;
  double det = 0.0;
};

/// Jets of every metric component to `order`, plus the inverse metric as
/// jets. Throws OutsideDomain or DegenerateMetric.
MetricAtPoint evaluate_metric_jet(const MetricSpec& spec, std::span<const double> point, int order);

/// Same evaluation without the safe-domain test (used for perturbed metrics
/// whose domain is inherited).
MetricAtPoint evaluate_metric_jet_unchecked(const MetricSpec& spec, std::span<const double> point,
                                            int order);

/// Eigenvalue sign counts of the metric at a point.
Signature infer_signature(const RealTensor& g);

/// Gauss-Jordan inverse of a symmetric matrix of jets (pivoting on values).
JetTensor invert_jet_matrix(const JetTensor& m);

/// adjust_index with the background metric; jet metrics are truncated to
/// the order of t.
RealTensor adjust_index(const RealTensor& t, int slot, IndexMove move, const MetricAtPoint& m);
JetTensor adjust_index(const JetTensor& t, int slot, IndexMove move, const MetricAtPoint& m);

}  // namespace linein
