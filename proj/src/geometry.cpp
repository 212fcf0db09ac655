#include "linein/geometry.hpp"

#include <cmath>

#include "linein/errors.hpp"

namespace linein {

JetTensor christoffel(const MetricAtPoint& m) {
  const int n = m.g_jet.dim();
  const int order = jet_order(m.g_jet);
  if (order < 1) throw InsufficientJetOrder("Christoffel symbols need metric jets of order >= 1");

  // dg[(a * n + b) * n + d] = d_a g_bd
  std::vector<Jet> dg;
  dg.reserve(static_cast<std::size_t>(n * n * n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int d = 0; d < n; ++d) dg.push_back(m.g_jet(b, d).partial(a));
  auto D = [&](int a, int b, int d) -> const Jet& { return dg[(a * n + b) * n + d]; };

  const JetTensor ginv = truncated(m.g_inv_jet, order - 1);
  JetTensor gamma(n, {Variance::Contravariant, Variance::Covariant, Variance::Covariant},
                  dg[0].zero_like());
  gamma.label = "Gamma";
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        Jet acc = dg[0].zero_like();
        for (int d = 0; d < n; ++d) {
          Jet lowered = D(a, b, d) + D(b, a, d) - D(d, a, b);
          acc.add_product(ginv(c, d), lowered, 0.5);
        }
        gamma(c, b, a) = acc;
        gamma(c, a, b) = std::move(acc);
      }
    }
  return gamma;
}

JetTensor covariant_derivative(const JetTensor& t, const JetTensor& gamma) {
  const int k = jet_order(t);
  if (k < 1) throw InsufficientJetOrder("covariant derivative needs jets of order >= 1");
  if (jet_order(gamma) < k - 1)
    throw InsufficientJetOrder("connection jets too shallow for covariant derivative");
  const int n = t.dim();
  const int rank = t.rank();
  const JetTensor G = truncated(gamma, k - 1);
  const JetTensor T = truncated(t, k - 1);

  Valence v;
  v.push_back(Variance::Covariant);
  v.insert(v.end(), t.valence().begin(), t.valence().end());
  JetTensor out(n, v, T[0].zero_like());

  std::vector<int> idx(rank), src(rank);
  for (int e = 0; e < n; ++e) {
    for (std::size_t f = 0; f < t.size(); ++f) {
      Jet acc = t[f].partial(e);
      t.unflatten(f, idx);
      for (int s = 0; s < rank; ++s) {
        src = idx;
        for (int p = 0; p < n; ++p) {
          src[s] = p;
          const Jet& tp = T[T.flatten(src)];
          if (t.variance(s) == Variance::Covariant)
            acc.add_product(G(p, e, idx[s]), tp, -1.0);
          else
            acc.add_product(G(idx[s], e, p), tp, 1.0);
        }
      }
      out[static_cast<std::size_t>(e) * t.size() + f] = std::move(acc);
    }
  }
  return out;
}

CurvaturePack curvature_pack(MetricAtPoint m) {
  const int n = m.g.dim();
  const int order = jet_order(m.g_jet);
  if (order < 3) throw InsufficientJetOrder("curvature pack needs metric jets of order >= 3");

  CurvaturePack pack;
  pack.point = m.point;
  pack.gamma = christoffel(m);

  // dG[((a * n + c) * n + b) * n + d] = d_a Gamma^c_bd
  std::vector<Jet> dG;
  dG.reserve(static_cast<std::size_t>(n) * n * n * n);
  for (int a = 0; a < n; ++a)
    for (std::size_t f = 0; f < pack.gamma.size(); ++f) dG.push_back(pack.gamma[f].partial(a));
  auto dGamma = [&](int a, int c, int b, int d) -> const Jet& {
    return dG[((a * n + c) * n + b) * n + d];
  };
  const JetTensor Gt = truncated(pack.gamma, order - 2);

  pack.riem_mixed = JetTensor(
      n, {Variance::Covariant, Variance::Covariant, Variance::Contravariant, Variance::Covariant},
      dG[0].zero_like());
  pack.riem_mixed.label = "R_ab^c_d";
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          Jet r = dGamma(a, c, b, d) - dGamma(b, c, a, d);
          for (int e = 0; e < n; ++e) {
            r.add_product(Gt(c, a, e), Gt(e, b, d), 1.0);
            r.add_product(Gt(c, b, e), Gt(e, a, d), -1.0);
          }
          pack.riem_mixed(b, a, c, d) = -r;
          pack.riem_mixed(a, b, c, d) = std::move(r);
        }

  const JetTensor g = truncated(m.g_jet, order - 2);
  const JetTensor ginv = truncated(m.g_inv_jet, order - 2);
  const Jet zero = g[0].zero_like();

  pack.riem_low = JetTensor(n, covariant(4), zero);
  pack.riem_low.label = "R_abcd";
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          Jet& out = pack.riem_low(a, b, c, d);
          for (int e = 0; e < n; ++e) out.add_product(g(c, e), pack.riem_mixed(a, b, e, d));
        }

  pack.ricci = JetTensor(n, covariant(2), zero);
  pack.ricci.label = "R_bd";
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) {
      Jet& out = pack.ricci(b, d);
      for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) out.add_product(ginv(a, c), pack.riem_low(a, b, c, d));
    }

  pack.scalar = zero;
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) pack.scalar.add_product(ginv(b, d), pack.ricci(b, d));

  pack.nabla_riem = covariant_derivative(pack.riem_low, pack.gamma);
  pack.nabla_riem.label = "nabla_e R_abcd";
  pack.m = std::move(m);
  return pack;
}

CurvaturePack curvature_pack(const MetricSpec& spec, std::span<const double> point, int order) {
  if (order < 3) throw InsufficientJetOrder("curvature pack needs metric jets of order >= 3");
  return curvature_pack(evaluate_metric_jet(spec, point, order));
}

double constant_curvature_residual(const CurvaturePack& pack, double kappa) {
  const int n = pack.dim();
  const RealTensor& g = pack.m.g;
  double worst = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          const double model = kappa * (g(a, c) * g(b, d) - g(a, d) * g(b, c));
          worst = std::max(worst, std::abs(pack.riem_low(a, b, c, d).value() - model));
        }
  return worst;
}

double curvature_scale(const CurvaturePack& pack) {
  return max_abs(values(pack.riem_low)) + max_abs(values(pack.ricci)) +
         std::abs(pack.scalar.value());
}

namespace {

double relative(double residual, double scale) { return scale > 0.0 ? residual / scale : residual; }

}  // namespace

EinsteinCertificate classify_packs(const std::vector<CurvaturePack>& packs, double tol) {
  EinsteinCertificate cert;
  cert.tolerance = tol;
  cert.points = packs.size();
  if (packs.empty()) return cert;
  const int n = packs.front().dim();

  std::vector<double> lam, kap, scales;
  for (const auto& pack : packs) {
    const double scale = curvature_scale(pack);
    const double R = pack.scalar.value();
    const double l = R / n;
    const double k = n > 1 ? R / (n * (n - 1)) : 0.0;
    double einstein = 0.0;
    for (int b = 0; b < n; ++b)
      for (int d = 0; d < n; ++d)
        einstein = std::max(einstein, std::abs(pack.ricci(b, d).value() - l * pack.m.g(b, d)));
    cert.einstein_residual = std::max(cert.einstein_residual, relative(einstein, scale));
    cert.cc_residual =
        std::max(cert.cc_residual, relative(constant_curvature_residual(pack, k), scale));
    lam.push_back(l);
    kap.push_back(k);
    scales.push_back(scale);
  }
  for (std::size_t i = 0; i < packs.size(); ++i) {
    cert.lambda += lam[i] / static_cast<double>(packs.size());
    cert.kappa += kap[i] / static_cast<double>(packs.size());
  }
  for (std::size_t i = 0; i < packs.size(); ++i)
    cert.lambda_spread = std::max(cert.lambda_spread, relative(std::abs(lam[i] - cert.lambda), scales[i]));

  cert.is_einstein = cert.einstein_residual <= tol && cert.lambda_spread <= tol;
  cert.is_constant_curvature = cert.is_einstein && cert.cc_residual <= tol;
  return cert;
}

EinsteinCertificate classify_background(const MetricSpec& spec,
                                        const std::vector<std::vector<double>>& sample_points,
                                        double tol, int order) {
  if (sample_points.size() < 2)
    throw std::invalid_argument("classification needs at least two sample points");
  std::vector<CurvaturePack> packs;
  for (const auto& p : sample_points) packs.push_back(curvature_pack(spec, p, order));
  return classify_packs(packs, tol);
}

JetTensor field_jets(std::span<const Expr> components, const ParamTable& params,
                     std::span<const double> point, Valence valence, int order) {
  const int n = static_cast<int>(point.size());
  JetTensor t(n, std::move(valence), Jet::constant(n, order, point, 0.0));
  if (components.size() != t.size())
    throw BadSlots("field has " + std::to_string(components.size()) + " components, expected " +
                   std::to_string(t.size()));
  for (std::size_t k = 0; k < t.size(); ++k)
    if (!components[k].is_number(0.0)) t[k] = evaluate_jet(components[k], params, point, order);
  return t;
}

JetTensor lie_derivative_metric(std::span<const Expr> covector, const MetricSpec& spec,
                                std::span<const double> point, int order) {
  if (order < 1) throw InsufficientJetOrder("Lie derivative needs jets of order >= 1");
  const int n = spec.dim;
  const MetricAtPoint m = evaluate_metric_jet(spec, point, order);
  const JetTensor X_low = field_jets(covector, spec.params, point, covariant(1), order);
  const JetTensor X_up = adjust_index(X_low, 0, IndexMove::Raise, m);

  const JetTensor g = truncated(m.g_jet, order - 1);
  const JetTensor X = truncated(X_up, order - 1);
  JetTensor out(n, covariant(2), g[0].zero_like());
  out.label = "L_X g";
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Jet& acc = out(a, b);
      for (int c = 0; c < n; ++c) {
        acc.add_product(X(c), m.g_jet(a, b).partial(c));
        acc.add_product(X_up(c).partial(a), g(c, b));
        acc.add_product(X_up(c).partial(b), g(a, c));
      }
    }
  return out;
}

}  // namespace linein
