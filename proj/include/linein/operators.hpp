#pragma once

// The linearised-Einstein operator family on a background CurvaturePack:
//   K  : X_b  -> nabla_(a X_b)                              (Killing operator)
//   C  : h_ab -> Calabi operator, a Riemann-type 4-tensor
//   P  : h_ab -> g^ac (C h)_abcd                            (deformation operator)
// plus the closed form of C(K X), the first-order Riemann/Ricci coefficients
// of g + eps h, and the contraction identities relating them.
//
// Every operator here returns the coefficient of eps; eps itself appears only
// in the perturbation oracle.

#include <span>
#include <string>

#include "linein/geometry.hpp"

namespace linein {

struct KillingData {
  JetTensor X_low;
  JetTensor X_up;
  /// nabla_(a X_b)
  JetTensor h;
  /// nabla_[a X_b]
  JetTensor mu;
};

KillingData killing_K(std::span<const Expr> covector, const CurvaturePack& pack,
                      const ParamTable& params, int order = kFieldJetOrder);
KillingData killing_K(std::span<const Expr> covector, const MetricSpec& spec,
                      std::span<const double> point, int order = kFieldJetOrder);
KillingData killing_K(const JetTensor& X_low, const CurvaturePack& pack);

enum class PerturbationSource { Expressions, KillingGenerated, RandomPolynomial };

struct Perturbation {
  JetTensor h;
  JetTensor h_up;
  Jet trace;
  PerturbationSource source = PerturbationSource::Expressions;
};

Perturbation make_perturbation(const JetTensor& h, const MetricAtPoint& m,
                               PerturbationSource source = PerturbationSource::Expressions);
/// h_ab from a dim*dim component list; requires symmetric components.
Perturbation make_perturbation(std::span<const Expr> components, const CurvaturePack& pack,
                               const ParamTable& params, int order = kFieldJetOrder,
                               PerturbationSource source = PerturbationSource::Expressions);
Perturbation make_perturbation(const KillingData& kd, const MetricAtPoint& m);

/// The two structural pieces of the Calabi operator:
///   second_derivatives = nabla_(a nabla_c) h_bd - nabla_(b nabla_c) h_ad
///                        - nabla_(a nabla_d) h_bc + nabla_(b nabla_d) h_ac
///   curvature          = R_ab^e_[c h_d]e + R_cd^e_[a h_b]e
/// (C h) = second_derivatives - curvature.
struct CalabiParts {
  RealTensor second_derivatives;
  RealTensor curvature;
  /// nabla_a nabla_c h_bd stored as (a, c, b, d)
  RealTensor hessian;
  /// max over entries of the summed |summands| of each piece
  double second_derivative_magnitude = 0.0;
  double curvature_magnitude = 0.0;
  double scale() const { return second_derivative_magnitude + curvature_magnitude; }
};

CalabiParts calabi_parts(const Perturbation& p, const CurvaturePack& pack);
RealTensor calabi_C(const Perturbation& p, const CurvaturePack& pack);

/// 2 R_ab^e_[c mu_d]e + 2 R_cd^e_[a mu_b]e - (nabla^e R_abcd) X_e
struct CkParts {
  RealTensor curvature_mu;
  RealTensor gradient;  // (nabla^e R_abcd) X_e
  RealTensor value;
  double curvature_mu_magnitude = 0.0;
  double gradient_magnitude = 0.0;
  double scale() const { return curvature_mu_magnitude + gradient_magnitude; }
};

CkParts ck_parts(const KillingData& kd, const CurvaturePack& pack);
RealTensor ck_formula(const KillingData& kd, const CurvaturePack& pack);

/// Bracket B with R~_abcd = R_abcd - (eps/2) B + O(eps^2).
struct LinearisedRiemann {
  /// second_derivatives + curvature
  RealTensor bracket;
  /// (C h) + 2 curvature, the second assembly route
  RealTensor via_calabi;
  double path_residual = 0.0;
  double scale = 0.0;
};

LinearisedRiemann linearised_riemann(const Perturbation& p, const CurvaturePack& pack);

/// R_(b^e h_d)e - 1/2 g^ac (C h)_abcd, the eps-coefficient of R~_bd.
RealTensor linearised_ricci(const Perturbation& p, const CurvaturePack& pack);

inline constexpr double kPathTolerance = 1e-10;

struct OperatorP {
  /// g^ac (C h)_abcd
  RealTensor value;
  /// Delta h_bd - 2 nabla^e nabla_(b h_d)e + nabla_b nabla_d h + 2 R_(b^e h_d)e
  RealTensor path_b;
  double residual = 0.0;
  /// sum of the max magnitudes of the four path-B terms
  double scale = 0.0;
};

/// Evaluates both routes; throws PathMismatch when they disagree by more
/// than kPathTolerance relative to scale and enforce is set.
OperatorP operator_P(const Perturbation& p, const CurvaturePack& pack, bool enforce = true);

struct IdentityResidual {
  double residual = 0.0;
  double scale = 0.0;
  double relative() const { return scale > 0.0 ? residual / scale : residual; }
};

/// g^ac(R_ab^e_[c h_d]e + R_cd^e_[a h_b]e) + R_(b^e h_d)e + h^ac R_abcd = 0
IdentityResidual ricci_trace_identity(const Perturbation& p, const CurvaturePack& pack);
/// g^ac (C K X)_abcd + 2 R_(b^e mu_d)e + (nabla^e R_bd) X_e = 0, using the closed form
IdentityResidual killing_trace_identity(const KillingData& kd, const CurvaturePack& pack);

/// R_b^e = R_bf g^fe as reals.
RealTensor ricci_mixed(const CurvaturePack& pack);
/// T_(b^e S_d)e with T mixed (b, e) and S covariant (d, e).
RealTensor symmetric_contraction(const RealTensor& mixed, const RealTensor& s);

}  // namespace linein
