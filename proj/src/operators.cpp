#include "linein/operators.hpp"

#include <algorithm>
#include <cmath>

#include "linein/errors.hpp"

namespace linein {

namespace {

/// T(b, d) = g^ac X(a, b, c, d)
RealTensor trace_first_third(const RealTensor& x, const RealTensor& g_inv) {
  const int n = x.dim();
  RealTensor out(n, covariant(2), 0.0);
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) {
      double acc = 0.0;
      for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) acc += g_inv(a, c) * x(a, b, c, d);
      out(b, d) = acc;
    }
  return out;
}

/// R_ab^e_[c s_d]e + R_cd^e_[a s_b]e for a 2-tensor s (symmetric or not),
/// with the entrywise sum of |summands| alongside.
struct Bracket {
  RealTensor value;
  RealTensor magnitude;
};

Bracket curvature_bracket(const RealTensor& rm, const RealTensor& s) {
  const int n = s.dim();
  Bracket out{RealTensor(n, covariant(4), 0.0), RealTensor(n, covariant(4), 0.0)};
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double acc = 0.0, mag = 0.0;
          for (int e = 0; e < n; ++e) {
            const double t[4] = {rm(a, b, e, c) * s(d, e), -rm(a, b, e, d) * s(c, e),
                                 rm(c, d, e, a) * s(b, e), -rm(c, d, e, b) * s(a, e)};
            for (double x : t) {
              acc += x;
              mag += std::abs(x);
            }
          }
          out.value(a, b, c, d) = 0.5 * acc;
          out.magnitude(a, b, c, d) = 0.5 * mag;
        }
  return out;
}

/// sum over a, c of |g^ac| m(a, b, c, d)
RealTensor trace_magnitude(const RealTensor& m, const RealTensor& g_inv) {
  const int n = m.dim();
  RealTensor out(n, covariant(2), 0.0);
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) {
      double acc = 0.0;
      for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) acc += std::abs(g_inv(a, c)) * m(a, b, c, d);
      out(b, d) = acc;
    }
  return out;
}

RealTensor symmetric_contraction_magnitude(const RealTensor& mixed, const RealTensor& s) {
  const int n = s.dim();
  RealTensor out(n, covariant(2), 0.0);
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) {
      double acc = 0.0;
      for (int e = 0; e < n; ++e)
        acc += std::abs(mixed(b, e) * s(d, e)) + std::abs(mixed(d, e) * s(b, e));
      out(b, d) = 0.5 * acc;
    }
  return out;
}

double rel(double residual, double scale) { return scale > 0.0 ? residual / scale : residual; }

}  // namespace

// ---------------------------------------------------------------------------

KillingData killing_K(const JetTensor& X_low, const CurvaturePack& pack) {
  if (jet_order(X_low) < 1) throw InsufficientJetOrder("Killing operator needs X jets of order >= 1");
  KillingData kd;
  kd.X_low = X_low;
  kd.X_up = adjust_index(X_low, 0, IndexMove::Raise, pack.m);
  const JetTensor grad = covariant_derivative(X_low, pack.gamma);
  kd.h = symmetrize_slots(grad, {0, 1}, SymmetryMode::Symmetric);
  kd.mu = symmetrize_slots(grad, {0, 1}, SymmetryMode::Antisymmetric);
  kd.h.label = "K(X)";
  kd.mu.label = "mu";
  return kd;
}

KillingData killing_K(std::span<const Expr> covector, const CurvaturePack& pack,
                      const ParamTable& params, int order) {
  return killing_K(field_jets(covector, params, pack.point, covariant(1), order), pack);
}

KillingData killing_K(std::span<const Expr> covector, const MetricSpec& spec,
                      std::span<const double> point, int order) {
  const CurvaturePack pack = curvature_pack(spec, point, std::max(order + 1, 3));
  return killing_K(covector, pack, spec.params, order);
}

Perturbation make_perturbation(const JetTensor& h, const MetricAtPoint& m, PerturbationSource source) {
  if (h.rank() != 2 || h.variance(0) != Variance::Covariant || h.variance(1) != Variance::Covariant)
    throw BadSlots("perturbation must be a covariant 2-tensor");
  Perturbation p;
  p.source = source;
  p.h = h;
  p.h.label = "h";
  p.h_up = adjust_index(adjust_index(h, 0, IndexMove::Raise, m), 1, IndexMove::Raise, m);
  const JetTensor ginv = truncated(m.g_inv_jet, jet_order(h));
  p.trace = h[0].zero_like();
  for (int a = 0; a < h.dim(); ++a)
    for (int b = 0; b < h.dim(); ++b) p.trace.add_product(ginv(a, b), h(a, b));
  return p;
}

Perturbation make_perturbation(std::span<const Expr> components, const CurvaturePack& pack,
                               const ParamTable& params, int order, PerturbationSource source) {
  const int n = pack.dim();
  if (static_cast<int>(components.size()) != n * n)
    throw BadSlots("perturbation needs dim*dim components");
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (to_string(components[a * n + b], {}) != to_string(components[b * n + a], {}))
        throw BadSlots("perturbation components must be symmetric");
  return make_perturbation(field_jets(components, params, pack.point, covariant(2), order), pack.m,
                           source);
}

Perturbation make_perturbation(const KillingData& kd, const MetricAtPoint& m) {
  return make_perturbation(kd.h, m, PerturbationSource::KillingGenerated);
}

// ---------------------------------------------------------------------------

CalabiParts calabi_parts(const Perturbation& p, const CurvaturePack& pack) {
  if (jet_order(p.h) < 2) throw InsufficientJetOrder("Calabi operator needs h jets of order >= 2");
  const int n = pack.dim();
  const JetTensor dh = covariant_derivative(p.h, pack.gamma);
  const RealTensor D = values(covariant_derivative(dh, pack.gamma));  // (a, c, b, d)

  CalabiParts parts;
  parts.hessian = D;
  parts.second_derivatives = RealTensor(n, covariant(4), 0.0);
  auto S = [&](int a, int c, int b, int d) { return 0.5 * (D(a, c, b, d) + D(c, a, b, d)); };
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          const double t[4] = {S(a, c, b, d), -S(b, c, a, d), -S(a, d, b, c), S(b, d, a, c)};
          parts.second_derivatives(a, b, c, d) = t[0] + t[1] + t[2] + t[3];
          parts.second_derivative_magnitude =
              std::max(parts.second_derivative_magnitude,
                       std::abs(t[0]) + std::abs(t[1]) + std::abs(t[2]) + std::abs(t[3]));
        }
  Bracket curv = curvature_bracket(values(pack.riem_mixed), values(p.h));
  parts.curvature = std::move(curv.value);
  parts.curvature_magnitude = max_abs(curv.magnitude);
  return parts;
}

RealTensor calabi_C(const Perturbation& p, const CurvaturePack& pack) {
  const CalabiParts parts = calabi_parts(p, pack);
  RealTensor out = parts.second_derivatives - parts.curvature;
  out.label = "C(h)";
  return out;
}

namespace {

struct CkTerms {
  CkParts parts;
  RealTensor curvature_mu_mag;
  RealTensor gradient_mag;
};

CkTerms ck_terms(const KillingData& kd, const CurvaturePack& pack) {
  const int n = pack.dim();
  const RealTensor mu = values(kd.mu);
  const RealTensor X = values(kd.X_up);
  const RealTensor nr = values(pack.nabla_riem);

  CkTerms out;
  CkParts& parts = out.parts;
  Bracket curv = curvature_bracket(values(pack.riem_mixed), mu);
  parts.curvature_mu = std::move(curv.value) * 2.0;
  out.curvature_mu_mag = std::move(curv.magnitude) * 2.0;
  parts.gradient = RealTensor(n, covariant(4), 0.0);
  out.gradient_mag = RealTensor(n, covariant(4), 0.0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double acc = 0.0, mag = 0.0;
          for (int f = 0; f < n; ++f) {
            const double t = nr(f, a, b, c, d) * X(f);
            acc += t;
            mag += std::abs(t);
          }
          parts.gradient(a, b, c, d) = acc;
          out.gradient_mag(a, b, c, d) = mag;
        }
  parts.value = parts.curvature_mu - parts.gradient;
  parts.value.label = "C(K(X)) closed form";
  parts.curvature_mu_magnitude = max_abs(out.curvature_mu_mag);
  parts.gradient_magnitude = max_abs(out.gradient_mag);
  return out;
}

}  // namespace

CkParts ck_parts(const KillingData& kd, const CurvaturePack& pack) {
  return ck_terms(kd, pack).parts;
}

RealTensor ck_formula(const KillingData& kd, const CurvaturePack& pack) {
  return ck_parts(kd, pack).value;
}

LinearisedRiemann linearised_riemann(const Perturbation& p, const CurvaturePack& pack) {
  const CalabiParts parts = calabi_parts(p, pack);
  LinearisedRiemann out;
  out.bracket = parts.second_derivatives + parts.curvature;
  out.via_calabi = (parts.second_derivatives - parts.curvature) + 2.0 * parts.curvature;
  out.path_residual = max_abs_difference(out.bracket, out.via_calabi);
  out.scale = parts.scale();
  return out;
}

RealTensor ricci_mixed(const CurvaturePack& pack) {
  const int n = pack.dim();
  RealTensor out(n, {Variance::Covariant, Variance::Contravariant}, 0.0);
  for (int b = 0; b < n; ++b)
    for (int e = 0; e < n; ++e) {
      double acc = 0.0;
      for (int f = 0; f < n; ++f) acc += pack.ricci(b, f).value() * pack.m.g_inv(f, e);
      out(b, e) = acc;
    }
  return out;
}

RealTensor symmetric_contraction(const RealTensor& mixed, const RealTensor& s) {
  const int n = s.dim();
  RealTensor out(n, covariant(2), 0.0);
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) {
      double acc = 0.0;
      for (int e = 0; e < n; ++e) acc += mixed(b, e) * s(d, e) + mixed(d, e) * s(b, e);
      out(b, d) = 0.5 * acc;
    }
  return out;
}

RealTensor linearised_ricci(const Perturbation& p, const CurvaturePack& pack) {
  RealTensor out = symmetric_contraction(ricci_mixed(pack), values(p.h)) -
                   0.5 * trace_first_third(calabi_C(p, pack), pack.m.g_inv);
  out.label = "linearised Ricci";
  return out;
}

OperatorP operator_P(const Perturbation& p, const CurvaturePack& pack, bool enforce) {
  const int n = pack.dim();
  const CalabiParts parts = calabi_parts(p, pack);
  const RealTensor& D = parts.hessian;
  const RealTensor& ginv = pack.m.g_inv;

  OperatorP out;
  out.value = trace_first_third(parts.second_derivatives - parts.curvature, ginv);
  out.value.label = "P(h)";

  RealTensor laplacian(n, covariant(2), 0.0), divergence(n, covariant(2), 0.0),
      trace_hessian(n, covariant(2), 0.0);
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) {
      double lap = 0.0, div = 0.0;
      for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) {
          lap += ginv(a, c) * D(a, c, b, d);
          div += 0.5 * ginv(a, c) * (D(a, b, d, c) + D(a, d, b, c));
        }
      laplacian(b, d) = lap;
      divergence(b, d) = div;
    }

  // nabla_b nabla_d of the scalar trace, through the scalar route
  const Jet& tr = p.trace;
  const RealTensor gamma = values(pack.gamma);
  std::vector<double> dtr(n);
  for (int e = 0; e < n; ++e) dtr[e] = tr.partial(e).value();
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) {
      double acc = tr.partial(d).partial(b).value();
      for (int e = 0; e < n; ++e) acc -= gamma(e, b, d) * dtr[e];
      trace_hessian(b, d) = acc;
    }

  const RealTensor ricci_h = symmetric_contraction(ricci_mixed(pack), values(p.h));
  out.path_b = laplacian - 2.0 * divergence + trace_hessian + 2.0 * ricci_h;
  out.path_b.label = "P(h) via Laplacian";
  out.scale = max_abs(laplacian) + 2.0 * max_abs(divergence) + max_abs(trace_hessian) +
              2.0 * max_abs(ricci_h);
  out.residual = max_abs_difference(out.value, out.path_b);
  if (enforce && rel(out.residual, out.scale) > kPathTolerance)
    throw PathMismatch("deformation operator routes disagree: residual " +
                       std::to_string(out.residual) + " at scale " + std::to_string(out.scale));
  return out;
}

// ---------------------------------------------------------------------------

IdentityResidual ricci_trace_identity(const Perturbation& p, const CurvaturePack& pack) {
  const int n = pack.dim();
  const RealTensor h = values(p.h);
  const RealTensor h_up = values(p.h_up);
  const RealTensor rmix = ricci_mixed(pack);
  const Bracket curv = curvature_bracket(values(pack.riem_mixed), h);
  const RealTensor term1 = trace_first_third(curv.value, pack.m.g_inv);
  const RealTensor term2 = symmetric_contraction(rmix, h);
  RealTensor term3(n, covariant(2), 0.0), term3_mag(n, covariant(2), 0.0);
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) {
      double acc = 0.0, mag = 0.0;
      for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) {
          const double t = h_up(a, c) * pack.riem_low(a, b, c, d).value();
          acc += t;
          mag += std::abs(t);
        }
      term3(b, d) = acc;
      term3_mag(b, d) = mag;
    }
  IdentityResidual r;
  r.residual = max_abs(term1 + term2 + term3);
  r.scale = max_abs(trace_magnitude(curv.magnitude, pack.m.g_inv)) +
            max_abs(symmetric_contraction_magnitude(rmix, h)) + max_abs(term3_mag);
  return r;
}

IdentityResidual killing_trace_identity(const KillingData& kd, const CurvaturePack& pack) {
  const int n = pack.dim();
  const CkTerms ck = ck_terms(kd, pack);
  const RealTensor& ginv = pack.m.g_inv;
  const RealTensor rmix = ricci_mixed(pack);
  const RealTensor mu = values(kd.mu);
  const RealTensor term1 = trace_first_third(ck.parts.value, ginv);
  const RealTensor term2 = 2.0 * symmetric_contraction(rmix, mu);

  const RealTensor X = values(kd.X_up);
  const RealTensor nr = values(pack.nabla_riem);
  RealTensor term3(n, covariant(2), 0.0), term3_mag(n, covariant(2), 0.0);
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) {
      double acc = 0.0, mag = 0.0;
      for (int f = 0; f < n; ++f)
        for (int a = 0; a < n; ++a)
          for (int c = 0; c < n; ++c) {
            const double t = X(f) * ginv(a, c) * nr(f, a, b, c, d);
            acc += t;
            mag += std::abs(t);
          }
      term3(b, d) = acc;
      term3_mag(b, d) = mag;
    }
  IdentityResidual r;
  r.residual = max_abs(term1 + term2 + term3);
  r.scale = max_abs(trace_magnitude(ck.curvature_mu_mag, ginv)) +
            max_abs(trace_magnitude(ck.gradient_mag, ginv)) +
            2.0 * max_abs(symmetric_contraction_magnitude(rmix, mu)) + max_abs(term3_mag);
  return r;
}

}  // namespace linein
