#include "linein/fields.hpp"

#include "linein/errors.hpp"

namespace linein {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void monomials(int dim, int degree, int start, MultiIndex& alpha, int used,
               std::vector<MultiIndex>& out) {
  out.push_back(alpha);
  if (used == degree) return;
  for (int v = start; v < dim; ++v) {
    ++alpha[v];
    monomials(dim, degree, v, alpha, used + 1, out);
    --alpha[v];
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(seed ^ h) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

double Rng::uniform(double lo, double hi) {
  const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

std::vector<std::vector<double>> sample_points(const MetricSpec& spec, std::size_t count,
                                               std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> pts(count, std::vector<double>(spec.dim));
  for (auto& p : pts)
    for (int i = 0; i < spec.dim; ++i) {
      const Interval& iv = spec.safe_domain[i];
      const double w = 0.9 * iv.half_width();
      p[i] = rng.uniform(iv.center() - w, iv.center() + w);
    }
  return pts;
}

Expr random_polynomial(const MetricSpec& spec, int degree, Rng& rng) {
  if (degree < 0) throw std::invalid_argument("polynomial degree must be non-negative");
  std::vector<Expr> u(spec.dim);
  for (int i = 0; i < spec.dim; ++i) {
    const Interval& iv = spec.safe_domain[i];
    u[i] = (Expr::coord(i) - Expr::number(iv.center())) / Expr::number(iv.half_width());
  }
  std::vector<MultiIndex> terms;
  MultiIndex alpha{};
  monomials(spec.dim, degree, 0, alpha, 0, terms);

  Expr sum = Expr::number(0.0);
  for (const MultiIndex& a : terms) {
    Expr term = Expr::number(rng.uniform(-1.0, 1.0));
    for (int i = 0; i < spec.dim; ++i)
      for (int k = 0; k < a[i]; ++k) term = term * u[i];
    sum = sum + term;
  }
  return sum;
}

std::vector<Expr> random_field(const MetricSpec& spec, Rng& rng, int degree) {
  std::vector<Expr> out;
  out.reserve(spec.dim);
  for (int i = 0; i < spec.dim; ++i) out.push_back(random_polynomial(spec, degree, rng));
  return out;
}

std::vector<Expr> random_symmetric(const MetricSpec& spec, Rng& rng, int degree) {
  const int n = spec.dim;
  std::vector<Expr> out(n * n);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) out[a * n + b] = out[b * n + a] = random_polynomial(spec, degree, rng);
  return out;
}

std::vector<Expr> lie_derivative_expressions(const MetricSpec& spec, std::span<const Expr> vector) {
  const int n = spec.dim;
  if (static_cast<int>(vector.size()) != n) throw BadSlots("vector field needs dim components");
  std::vector<Expr> out(n * n);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      Expr acc = Expr::number(0.0);
      for (int c = 0; c < n; ++c) {
        acc = acc + vector[c] * differentiate(spec.component(a, b), c);
        acc = acc + differentiate(vector[c], a) * spec.component(c, b);
        acc = acc + differentiate(vector[c], b) * spec.component(a, c);
      }
      out[a * n + b] = out[b * n + a] = acc;
    }
  return out;
}

std::vector<Expr> scaled_metric_expressions(const MetricSpec& spec, double c) {
  std::vector<Expr> out(spec.components.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = Expr::number(c) * spec.components[k];
  return out;
}

}  // namespace linein
