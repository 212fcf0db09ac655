#pragma once

// Independent checks on the operator layer. Nothing here includes
// operators.hpp: the perturbed curvature is recomputed from the summed metric
// expressions g + eps h, and the finite-difference curvature never touches
// jets.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "linein/geometry.hpp"

namespace linein {

struct OracleConfig {
  /// strictly decreasing, all positive
  std::vector<double> epsilons{1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
  /// ladder points used in the fit, counted from the small end; 0 means all
  std::size_t slope_window = 0;
  std::uint64_t seed = 42;
  std::size_t points_per_background = 20;
  int jet_order = kMetricJetOrder;

  void validate() const;
};

/// Spec with components g_ab + eps h_ab, same chart, domain and parameters.
MetricSpec perturbed_metric_spec(const MetricSpec& spec, std::span<const Expr> h, double eps);

struct PerturbedPack {
  CurvaturePack pack;
  /// max |g~^ab - (g^ab - eps h^ab)|
  double inverse_residual = 0.0;
};

PerturbedPack perturbed_metric_pack(const MetricSpec& spec, std::span<const Expr> h, double eps,
                                    std::span<const double> point, int order = kMetricJetOrder);

/// Curvature from central differences of the metric expressions alone.
struct FdCurvature {
  RealTensor gamma;     // (c, a, b)
  RealTensor riem_low;  // R_abcd
  RealTensor ricci;
  double scalar = 0.0;
};

FdCurvature fd_curvature(const MetricSpec& spec, std::span<const double> point,
                         double step = kDefaultFdStep);

// ---------------------------------------------------------------------------

enum class SlopeVerdict { Fitted, SaturatedAtRoundoff, Undefined };

const char* to_string(SlopeVerdict v);

/// Relative residuals below this count as roundoff.
inline constexpr double kRoundoffFloor = 1e-12;

struct SlopeFit {
  double slope = 0.0;
  SlopeVerdict verdict = SlopeVerdict::Undefined;
  std::size_t window = 0;
  std::vector<double> residuals;
};

/// Least-squares slope of log(residual) against log(eps) over the window,
/// ignoring ladder points already at roundoff. All points at roundoff give
/// SaturatedAtRoundoff; fewer than two usable points give Undefined.
SlopeFit fit_slope(std::span<const double> epsilons, std::span<const double> residuals,
                   std::size_t window = 0);

SlopeFit first_order_convergence(const std::function<double(double)>& residual_at,
                                 const OracleConfig& config);

}  // namespace linein
