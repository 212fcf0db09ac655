#include "linein/oracle.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "linein/errors.hpp"

namespace linein {

void OracleConfig::validate() const {
  if (epsilons.size() < 2) throw std::invalid_argument("epsilon ladder needs at least two values");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0)) throw std::invalid_argument("epsilons must be positive");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1]))
      throw std::invalid_argument("epsilons must be strictly decreasing");
  }
  if (slope_window == 1) throw std::invalid_argument("slope window must be 0 or at least 2");
  if (jet_order < 4 || jet_order > kMaxJetOrder)
    throw std::invalid_argument("jet order must be between 4 and " + std::to_string(kMaxJetOrder));
}

MetricSpec perturbed_metric_spec(const MetricSpec& spec, std::span<const Expr> h, double eps) {
  const int n = spec.dim;
  if (static_cast<int>(h.size()) != n * n)
    throw BadSlots("perturbation needs dim*dim components");
  MetricSpec out = spec;
  out.name = spec.name + "+eps*h";
  const Expr e = Expr::number(eps);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) out.set_component(a, b, spec.component(a, b) + e * h[a * n + b]);
  return out;
}

namespace {

Eigen::MatrixXd metric_values(const MetricSpec& spec, std::span<const double> point) {
  const int n = spec.dim;
  Eigen::MatrixXd g(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) g(a, b) = g(b, a) = evaluate(spec.component(a, b), spec.params, point);
  return g;
}

}  // namespace

PerturbedPack perturbed_metric_pack(const MetricSpec& spec, std::span<const Expr> h, double eps,
                                    std::span<const double> point, int order) {
  const int n = spec.dim;
  PerturbedPack out;
  out.pack = curvature_pack(perturbed_metric_spec(spec, h, eps), point, order);

  const Eigen::MatrixXd ginv = metric_values(spec, point).inverse();
  Eigen::MatrixXd hm(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) hm(a, b) = evaluate(h[a * n + b], spec.params, point);
  const Eigen::MatrixXd first_order = ginv - eps * (ginv * hm * ginv);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      out.inverse_residual =
          std::max(out.inverse_residual, std::abs(out.pack.m.g_inv(a, b) - first_order(a, b)));
  return out;
}

FdCurvature fd_curvature(const MetricSpec& spec, std::span<const double> point, double step) {
  const int n = spec.dim;
  auto at3 = [n](int i, int j, int k) { return (i * n + j) * n + k; };
  auto at4 = [n](int i, int j, int k, int l) { return ((i * n + j) * n + k) * n + l; };

  const Eigen::MatrixXd g = metric_values(spec, point);
  const Eigen::MatrixXd ginv = g.inverse();

  // dg[a][b][c] = d_a g_bc, ddg[a][e][b][c] = d_a d_e g_bc
  std::vector<double> dg(n * n * n), ddg(n * n * n * n);
  for (int b = 0; b < n; ++b)
    for (int c = b; c < n; ++c) {
      const Expr& e = spec.component(b, c);
      for (int a = 0; a < n; ++a) {
        MultiIndex alpha{};
        alpha[a] = 1;
        dg[at3(a, b, c)] = dg[at3(a, c, b)] = finite_difference(e, spec.params, point, alpha, step);
        for (int f = a; f < n; ++f) {
          MultiIndex beta{};
          beta[a] += 1;
          beta[f] += 1;
          const double v = finite_difference(e, spec.params, point, beta, step);
          ddg[at4(a, f, b, c)] = ddg[at4(a, f, c, b)] = v;
          ddg[at4(f, a, b, c)] = ddg[at4(f, a, c, b)] = v;
        }
      }
    }

  // Gamma^c_ab and d_e Gamma^c_ab
  std::vector<double> gamma(n * n * n, 0.0), dgamma(n * n * n * n, 0.0);
  for (int c = 0; c < n; ++c)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double acc = 0.0;
        for (int d = 0; d < n; ++d)
          acc += 0.5 * ginv(c, d) * (dg[at3(a, b, d)] + dg[at3(b, a, d)] - dg[at3(d, a, b)]);
        gamma[at3(c, a, b)] = acc;
      }
  for (int e = 0; e < n; ++e) {
    Eigen::MatrixXd dge(n, n);
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) dge(p, q) = dg[at3(e, p, q)];
    const Eigen::MatrixXd dginv = -ginv * dge * ginv;
    for (int c = 0; c < n; ++c)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          double acc = 0.0;
          for (int d = 0; d < n; ++d) {
            acc += 0.5 * dginv(c, d) * (dg[at3(a, b, d)] + dg[at3(b, a, d)] - dg[at3(d, a, b)]);
            acc += 0.5 * ginv(c, d) *
                   (ddg[at4(e, a, b, d)] + ddg[at4(e, b, a, d)] - ddg[at4(e, d, a, b)]);
          }
          dgamma[at4(e, c, a, b)] = acc;
        }
  }

  FdCurvature out;
  out.gamma = RealTensor(n, {Variance::Contravariant, Variance::Covariant, Variance::Covariant}, 0.0);
  for (std::size_t k = 0; k < out.gamma.size(); ++k) out.gamma[k] = gamma[k];

  RealTensor mixed(n, {Variance::Covariant, Variance::Covariant, Variance::Contravariant,
                       Variance::Covariant},
                   0.0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double r = dgamma[at4(a, c, b, d)] - dgamma[at4(b, c, a, d)];
          for (int e = 0; e < n; ++e)
            r += gamma[at3(c, a, e)] * gamma[at3(e, b, d)] - gamma[at3(c, b, e)] * gamma[at3(e, a, d)];
          mixed(a, b, c, d) = r;
        }
  out.riem_low = RealTensor(n, covariant(4), 0.0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double acc = 0.0;
          for (int e = 0; e < n; ++e) acc += g(c, e) * mixed(a, b, e, d);
          out.riem_low(a, b, c, d) = acc;
        }
  out.ricci = RealTensor(n, covariant(2), 0.0);
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) {
      double acc = 0.0;
      for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) acc += ginv(a, c) * out.riem_low(a, b, c, d);
      out.ricci(b, d) = acc;
    }
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) out.scalar += ginv(b, d) * out.ricci(b, d);
  return out;
}

// ---------------------------------------------------------------------------

const char* to_string(SlopeVerdict v) {
  switch (v) {
    case SlopeVerdict::Fitted: return "fitted";
    case SlopeVerdict::SaturatedAtRoundoff: return "saturated";
    case SlopeVerdict::Undefined: return "undefined";
  }
  return "?";
}

SlopeFit fit_slope(std::span<const double> epsilons, std::span<const double> residuals,
                   std::size_t window) {
  if (epsilons.size() != residuals.size())
    throw std::invalid_argument("ladder and residual lengths differ");
  SlopeFit fit;
  fit.residuals.assign(residuals.begin(), residuals.end());

  const std::size_t n = epsilons.size();
  const std::size_t begin = (window == 0 || window >= n) ? 0 : n - window;
  bool all_floor = true;
  for (std::size_t i = begin; i < n; ++i)
    if (!(residuals[i] < kRoundoffFloor)) all_floor = false;
  if (all_floor) {
    fit.verdict = SlopeVerdict::SaturatedAtRoundoff;
    fit.window = n - begin;
    return fit;
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t i = begin; i < n; ++i) {
    if (!(residuals[i] >= kRoundoffFloor) || !std::isfinite(residuals[i])) continue;
    const double x = std::log(epsilons[i]);
    const double y = std::log(residuals[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  fit.window = m;
  if (m < 2) return fit;
  const double denom = m * sxx - sx * sx;
  fit.slope = (m * sxy - sx * sy) / denom;
  fit.verdict = SlopeVerdict::Fitted;
  return fit;
}

SlopeFit first_order_convergence(const std::function<double(double)>& residual_at,
                                 const OracleConfig& config) {
  config.validate();
  std::vector<double> residuals;
  residuals.reserve(config.epsilons.size());
  for (double eps : config.epsilons) residuals.push_back(residual_at(eps));
  return fit_slope(config.epsilons, residuals, config.slope_window);
}

}  // namespace linein
