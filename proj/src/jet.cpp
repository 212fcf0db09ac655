#include "linein/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "linein/errors.hpp"

namespace linein {

int degree(const MultiIndex& alpha) {
  int d = 0;
  for (auto a : alpha) d += a;
  return d;
}

double multi_factorial(const MultiIndex& alpha) {
  double f = 1.0;
  for (auto a : alpha)
    for (int k = 2; k <= a; ++k) f *= k;
  return f;
}

namespace {

void compositions(int dim, int var, int remaining, MultiIndex& cur,
                  std::vector<MultiIndex>& out) {
  if (var == dim - 1) {
    cur[var] = static_cast<std::uint8_t>(remaining);
    out.push_back(cur);
    cur[var] = 0;
    return;
  }
  for (int k = remaining; k >= 0; --k) {
    cur[var] = static_cast<std::uint8_t>(k);
    compositions(dim, var + 1, remaining - k, cur, out);
  }
  cur[var] = 0;
}

struct LayoutCache {
  std::once_flag once[kMaxDim + 1][kMaxJetOrder + 1];
  std::unique_ptr<JetLayout> slot[kMaxDim + 1][kMaxJetOrder + 1];
};

LayoutCache& layout_cache() {
  static LayoutCache cache;
  return cache;
}

}  // namespace

JetLayout::JetLayout(int dim, int order) : dim_(dim), order_(order) {
  MultiIndex cur{};
  for (int d = 0; d <= order; ++d) {
    compositions(dim, 0, d, cur, indices_);
    prefix_.push_back(indices_.size());
  }

  std::map<MultiIndex, std::uint32_t> lookup;
  for (std::size_t i = 0; i < indices_.size(); ++i)
    lookup.emplace(indices_[i], static_cast<std::uint32_t>(i));

  for (std::size_t i = 0; i < indices_.size(); ++i) {
    const int di = degree(indices_[i]);
    for (std::size_t j = 0; j < prefix_[order - di]; ++j) {
      MultiIndex sum{};
      for (int v = 0; v < dim; ++v) sum[v] = indices_[i][v] + indices_[j][v];
      products_.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                           lookup.at(sum)});
    }
  }

  deriv_.resize(dim);
  if (order > 0) {
    for (int v = 0; v < dim; ++v) {
      for (std::size_t k = 0; k < prefix_[order - 1]; ++k) {
        MultiIndex up = indices_[k];
        const double factor = up[v] + 1;
        up[v] += 1;
        deriv_[v].push_back({lookup.at(up), factor});
      }
    }
  }
}

const JetLayout& JetLayout::get(int dim, int order) {
  if (dim < 1 || dim > kMaxDim)
    throw std::invalid_argument("jet dimension out of range: " + std::to_string(dim));
  if (order < 0 || order > kMaxJetOrder)
    throw std::invalid_argument("jet order out of range: " + std::to_string(order));
  auto& cache = layout_cache();
  std::call_once(cache.once[dim][order], [&] {
    cache.slot[dim][order].reset(new JetLayout(dim, order));
  });
  return *cache.slot[dim][order];
}

std::size_t JetLayout::rank(const MultiIndex& alpha) const {
  const int d = degree(alpha);
  if (d > order_) throw std::out_of_range("multi-index exceeds jet order");
  for (int v = dim_; v < kMaxDim; ++v)
    if (alpha[v] != 0) throw std::out_of_range("multi-index exceeds jet dimension");
  const std::size_t begin = d == 0 ? 0 : prefix_[d - 1];
  for (std::size_t k = begin; k < prefix_[d]; ++k)
    if (indices_[k] == alpha) return k;
  throw std::out_of_range("multi-index not found");
}

// ---------------------------------------------------------------------------

Jet::Jet(const JetLayout& layout, const BasePoint& base, double constant)
    : layout_(&layout), base_(base), coeffs_(layout.size(), 0.0) {
  coeffs_[0] = constant;
}

Jet Jet::constant(int dim, int order, std::span<const double> base, double c) {
  BasePoint b{};
  std::copy_n(base.begin(), std::min<std::size_t>(base.size(), dim), b.begin());
  return Jet(JetLayout::get(dim, order), b, c);
}

Jet Jet::variable(int dim, int order, std::span<const double> base, int var) {
  Jet j = constant(dim, order, base, base[var]);
  if (order > 0) {
    MultiIndex e{};
    e[var] = 1;
    j.coeffs_[j.layout_->rank(e)] = 1.0;
  }
  return j;
}

double Jet::coeff(const MultiIndex& alpha) const { return coeffs_[layout_->rank(alpha)]; }

double Jet::derivative(const MultiIndex& alpha) const {
  return coeff(alpha) * multi_factorial(alpha);
}

Jet Jet::truncated(int order) const {
  if (order > this->order())
    throw InsufficientJetOrder("cannot raise jet order from " + std::to_string(this->order()) +
                               " to " + std::to_string(order));
  if (order == this->order()) return *this;
  Jet out(JetLayout::get(dim(), order), base_);
  std::copy_n(coeffs_.begin(), out.coeffs_.size(), out.coeffs_.begin());
  return out;
}

Jet Jet::partial(int var) const {
  if (order() == 0) throw InsufficientJetOrder("cannot differentiate an order-0 jet");
  Jet out(JetLayout::get(dim(), order() - 1), base_);
  const auto& table = layout_->derivative_table(var);
  for (std::size_t k = 0; k < table.size(); ++k)
    out.coeffs_[k] = table[k].factor * coeffs_[table[k].source];
  return out;
}

bool compatible(const Jet& a, const Jet& b) {
  if (a.layout_ != b.layout_) return false;
  for (int v = 0; v < a.dim(); ++v)
    if (a.base_[v] != b.base_[v]) return false;
  return true;
}

void require_compatible(const Jet& a, const Jet& b) {
  if (!a.valid() || !b.valid()) throw MismatchedJets("uninitialised jet operand");
  if (!compatible(a, b))
    throw MismatchedJets("jets differ in dimension, order or base point (orders " +
                         std::to_string(a.order()) + ", " + std::to_string(b.order()) + ")");
}

Jet Jet::operator-() const {
  Jet out = *this;
  for (auto& c : out.coeffs_) c = -c;
  return out;
}

Jet& Jet::operator+=(const Jet& rhs) {
  require_compatible(*this, rhs);
  for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] += rhs.coeffs_[k];
  return *this;
}

Jet& Jet::operator-=(const Jet& rhs) {
  require_compatible(*this, rhs);
  for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] -= rhs.coeffs_[k];
  return *this;
}

Jet& Jet::operator*=(const Jet& rhs) {
  require_compatible(*this, rhs);
  std::vector<double> out(coeffs_.size(), 0.0);
  for (const auto& p : layout_->products()) out[p.out] += coeffs_[p.lhs] * rhs.coeffs_[p.rhs];
  coeffs_ = std::move(out);
  return *this;
}

Jet& Jet::operator/=(const Jet& rhs) { return *this *= reciprocal(rhs); }

Jet& Jet::operator+=(double rhs) {
  coeffs_[0] += rhs;
  return *this;
}

Jet& Jet::operator-=(double rhs) {
  coeffs_[0] -= rhs;
  return *this;
}

Jet& Jet::operator*=(double rhs) {
  for (auto& c : coeffs_) c *= rhs;
  return *this;
}

Jet& Jet::operator/=(double rhs) {
  if (rhs == 0.0) throw EvaluationSingular("division of jet by zero");
  for (auto& c : coeffs_) c /= rhs;
  return *this;
}

void Jet::add_product(const Jet& a, const Jet& b, double scale) {
  require_compatible(*this, a);
  require_compatible(a, b);
  for (const auto& p : layout_->products())
    coeffs_[p.out] += scale * a.coeffs_[p.lhs] * b.coeffs_[p.rhs];
}

Jet operator/(double a, const Jet& b) { return reciprocal(b) *= a; }

// ---------------------------------------------------------------------------

Jet compose(const Jet& a, std::span<const double> series) {
  Jet u = a;
  u.coeffs()[0] = 0.0;
  const int n = std::min<int>(a.order(), static_cast<int>(series.size()) - 1);
  Jet out = a.zero_like();
  out.coeffs()[0] = series[n];
  for (int k = n - 1; k >= 0; --k) {
    out *= u;
    out += series[k];
  }
  return out;
}

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw EvaluationSingular(std::string(what) + " produced a non-finite value");
}

}  // namespace

Jet reciprocal(const Jet& a) {
  const double a0 = a.value();
  if (a0 == 0.0) throw EvaluationSingular("division by zero");
  std::vector<double> s(a.order() + 1);
  double p = 1.0 / a0;
  for (int k = 0; k <= a.order(); ++k) {
    s[k] = (k % 2 == 0 ? p : -p);
    p /= a0;
  }
  require_finite(s.back(), "reciprocal");
  return compose(a, s);
}

Jet sin(const Jet& a) {
  const double sa = std::sin(a.value()), ca = std::cos(a.value());
  std::vector<double> s(a.order() + 1);
  double fact = 1.0;
  for (int k = 0; k <= a.order(); ++k) {
    if (k > 0) fact *= k;
    const double cyc[4] = {sa, ca, -sa, -ca};
    s[k] = cyc[k % 4] / fact;
  }
  return compose(a, s);
}

Jet cos(const Jet& a) {
  const double sa = std::sin(a.value()), ca = std::cos(a.value());
  std::vector<double> s(a.order() + 1);
  double fact = 1.0;
  for (int k = 0; k <= a.order(); ++k) {
    if (k > 0) fact *= k;
    const double cyc[4] = {ca, -sa, -ca, sa};
    s[k] = cyc[k % 4] / fact;
  }
  return compose(a, s);
}

Jet exp(const Jet& a) {
  const double ea = std::exp(a.value());
  require_finite(ea, "exp");
  std::vector<double> s(a.order() + 1);
  double fact = 1.0;
  for (int k = 0; k <= a.order(); ++k) {
    if (k > 0) fact *= k;
    s[k] = ea / fact;
  }
  return compose(a, s);
}

Jet log(const Jet& a) {
  const double a0 = a.value();
  if (!(a0 > 0.0)) throw EvaluationSingular("log of non-positive value");
  std::vector<double> s(a.order() + 1);
  s[0] = std::log(a0);
  double p = 1.0;
  for (int k = 1; k <= a.order(); ++k) {
    p /= a0;
    s[k] = (k % 2 == 1 ? p : -p) / k;
  }
  return compose(a, s);
}

Jet pow(const Jet& a, double p) {
  if (p == std::round(p) && std::abs(p) <= 64) return pow(a, static_cast<int>(p));
  const double a0 = a.value();
  if (!(a0 > 0.0)) throw EvaluationSingular("fractional power of non-positive value");
  std::vector<double> s(a.order() + 1);
  double binom = 1.0;
  for (int k = 0; k <= a.order(); ++k) {
    if (k > 0) binom *= (p - (k - 1)) / k;
    s[k] = binom * std::pow(a0, p - k);
  }
  return compose(a, s);
}

Jet sqrt(const Jet& a) {
  if (!(a.value() > 0.0)) {
    if (a.value() == 0.0 && a.order() == 0) return a.zero_like();
    throw EvaluationSingular("sqrt of non-positive value");
  }
  return pow(a, 0.5);
}

Jet pow(const Jet& a, int n) {
  if (n < 0) return reciprocal(pow(a, -n));
  Jet result = a.zero_like();
  result.coeffs()[0] = 1.0;
  Jet base = a;
  while (n > 0) {
    if (n & 1) result *= base;
    n >>= 1;
    if (n > 0) base *= base;
  }
  return result;
}

Jet pow(const Jet& a, const Jet& b) {
  require_compatible(a, b);
  return exp(b * log(a));
}

// ---------------------------------------------------------------------------

namespace {

struct Stencil {
  std::vector<int> offsets;
  std::vector<double> weights;
};

const Stencil& stencil(int n) {
  static const Stencil table[5] = {
      {{0}, {1.0}},
      {{-1, 1}, {-0.5, 0.5}},
      {{-1, 0, 1}, {1.0, -2.0, 1.0}},
      {{-2, -1, 1, 2}, {-0.5, 1.0, -1.0, 0.5}},
      {{-2, -1, 0, 1, 2}, {1.0, -4.0, 6.0, -4.0, 1.0}},
  };
  return table[n];
}

double central_difference(const ScalarField& f, std::span<const double> point,
                          const MultiIndex& alpha, double h) {
  const int dim = static_cast<int>(point.size());
  std::vector<int> vars;
  for (int v = 0; v < dim; ++v)
    if (alpha[v] > 0) vars.push_back(v);

  std::vector<double> x(point.begin(), point.end());
  std::vector<std::size_t> pos(vars.size(), 0);
  double sum = 0.0;
  while (true) {
    double w = 1.0;
    for (std::size_t i = 0; i < vars.size(); ++i) {
      const auto& s = stencil(alpha[vars[i]]);
      x[vars[i]] = point[vars[i]] + s.offsets[pos[i]] * h;
      w *= s.weights[pos[i]];
    }
    const double fx = f(x);
    if (!std::isfinite(fx)) throw EvaluationSingular("non-finite value on difference stencil");
    sum += w * fx;

    std::size_t i = 0;
    for (; i < vars.size(); ++i) {
      if (++pos[i] < stencil(alpha[vars[i]]).offsets.size()) break;
      pos[i] = 0;
    }
    if (i == vars.size()) break;
  }
  return sum / std::pow(h, degree(alpha));
}

}  // namespace

double finite_difference(const ScalarField& f, std::span<const double> point,
                         const MultiIndex& alpha, double step) {
  if (degree(alpha) > 4) throw std::invalid_argument("finite differences limited to order 4");
  for (int v = 0; v < kMaxDim; ++v)
    if (alpha[v] > 0 && v >= static_cast<int>(point.size()))
      throw std::invalid_argument("multi-index exceeds point dimension");
  if (degree(alpha) == 0) {
    const double v = f(point);
    if (!std::isfinite(v)) throw EvaluationSingular("non-finite value at point");
    return v;
  }
  const double coarse = central_difference(f, point, alpha, step);
  const double fine = central_difference(f, point, alpha, 0.5 * step);
  return (4.0 * fine - coarse) / 3.0;
}

}  // namespace linein
