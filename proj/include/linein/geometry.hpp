#pragma once

// Levi-Civita connection, curvature and its covariant derivative at a point.
//
// Conventions (fixed by the commutator identity, checked in the tests):
//   (nabla_a nabla_b - nabla_b nabla_a) X^c = R_ab^c_d X^d
//   R_ab^c_d = d_a Gamma^c_bd - d_b Gamma^c_ad + Gamma^c_ae Gamma^e_bd - Gamma^c_be Gamma^e_ad
//   R_abcd   = g_ce R_ab^e_d
//   R_bd     = g^ac R_abcd
// so that the round sphere of radius r has R_bd = (n-1)/r^2 g_bd.

#include <span>
#include <string>
#include <vector>

#include "linein/expr.hpp"
#include "linein/metric.hpp"
#include "linein/tensor.hpp"

namespace linein {

inline constexpr int kMetricJetOrder = 4;
inline constexpr int kFieldJetOrder = 3;

struct CurvaturePack {
  std::vector<double> point;
  MetricAtPoint m;
  /// gamma(c, a, b) = Gamma^c_ab, jet order N-1
  JetTensor gamma;
  /// riem_mixed(a, b, c, d) = R_ab^c_d, jet order N-2
  JetTensor riem_mixed;
  JetTensor riem_low;
  JetTensor ricci;
  Jet scalar;
  /// nabla_riem(e, a, b, c, d) = nabla_e R_abcd, jet order N-3
  JetTensor nabla_riem;

  int dim() const { return m.g.dim(); }
};

/// Gamma^c_ab = 1/2 g^cd (d_a g_bd + d_b g_ad - d_d g_ab); jet order drops by one.
JetTensor christoffel(const MetricAtPoint& m);

/// Prepends the derivative slot: out(e, ...) = nabla_e T(...). Gamma is
/// truncated to match; the result has jet order one below T.
JetTensor covariant_derivative(const JetTensor& t, const JetTensor& gamma);

/// Full curvature pipeline from the metric jets at point (order >= 3).
CurvaturePack curvature_pack(const MetricSpec& spec, std::span<const double> point,
                             int order = kMetricJetOrder);
CurvaturePack curvature_pack(MetricAtPoint m);

/// max |R_abcd - kappa (g_ac g_bd - g_ad g_bc)| at the pack's point.
double constant_curvature_residual(const CurvaturePack& pack, double kappa);
/// max|riem_low| + max|ricci| + |R|
double curvature_scale(const CurvaturePack& pack);

struct EinsteinCertificate {
  bool is_einstein = false;
  double lambda = 0.0;
  /// max over points of |R/n - lambda| relative to the curvature scale
  double lambda_spread = 0.0;
  double einstein_residual = 0.0;
  bool is_constant_curvature = false;
  double kappa = 0.0;
  double cc_residual = 0.0;
  double tolerance = 0.0;
  std::size_t points = 0;
};

EinsteinCertificate classify_background(const MetricSpec& spec,
                                        const std::vector<std::vector<double>>& sample_points,
                                        double tol, int order = kMetricJetOrder);
EinsteinCertificate classify_packs(const std::vector<CurvaturePack>& packs, double tol);

/// Jets of the given field expressions at point.
JetTensor field_jets(std::span<const Expr> components, const ParamTable& params,
                     std::span<const double> point, Valence valence, int order);

/// L_X g_ab = X^c d_c g_ab + (d_a X^c) g_cb + (d_b X^c) g_ac for the covector
/// field X_a (raised with the metric); no Christoffel symbols involved.
JetTensor lie_derivative_metric(std::span<const Expr> covector, const MetricSpec& spec,
                                std::span<const double> point, int order = kFieldJetOrder);

}  // namespace linein
