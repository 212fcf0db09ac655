#pragma once

// Truncated multivariate Taylor series ("jets").
//
// A Jet of order N over d variables stores the Taylor coefficients
//   c_alpha = (d^alpha f)(x0) / alpha!
// for every multi-index |alpha| <= N, ordered by total degree first and then
// lexicographically (graded-lex rank). With that normalisation the product of
// two jets is the plain truncated convolution of their coefficient tables, and
// truncation to a lower order is a prefix of the coefficient vector.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace linein {

inline constexpr int kMaxDim = 6;
inline constexpr int kMaxJetOrder = 8;

using MultiIndex = std::array<std::uint8_t, kMaxDim>;
using BasePoint = std::array<double, kMaxDim>;

int degree(const MultiIndex& alpha);
double multi_factorial(const MultiIndex& alpha);

/// Precomputed index tables shared by every jet of a given (dim, order).
class JetLayout {
 public:
  static const JetLayout& get(int dim, int order);

  int dim() const { return dim_; }
  int order() const { return order_; }
  std::size_t size() const { return indices_.size(); }

  const MultiIndex& index(std::size_t rank) const { return indices_[rank]; }
  std::size_t rank(const MultiIndex& alpha) const;
  /// Number of coefficients of total degree <= d.
  std::size_t prefix(int d) const { return prefix_[d]; }

  struct Product {
    std::uint32_t lhs, rhs, out;
  };
  const std::vector<Product>& products() const { return products_; }

  struct Shift {
    std::uint32_t source;
    double factor;
  };
  /// d/dx_var mapping: entry k gives the source coefficient feeding
  /// coefficient k of the derivative (a jet of order - 1).
  const std::vector<Shift>& derivative_table(int var) const { return deriv_[var]; }

 private:
  JetLayout(int dim, int order);

  int dim_;
  int order_;
  std::vector<MultiIndex> indices_;
  std::vector<std::size_t> prefix_;
  std::vector<Product> products_;
  std::vector<std::vector<Shift>> deriv_;
};

class Jet {
 public:
  Jet() = default;
  Jet(const JetLayout& layout, const BasePoint& base, double constant = 0.0);

  static Jet constant(int dim, int order, std::span<const double> base, double c);
  /// The coordinate function x_var expanded around base.
  static Jet variable(int dim, int order, std::span<const double> base, int var);

  bool valid() const { return layout_ != nullptr; }
  int dim() const { return layout_->dim(); }
  int order() const { return layout_->order(); }
  const JetLayout& layout() const { return *layout_; }
  const BasePoint& base() const { return base_; }

  double value() const { return coeffs_[0]; }
  std::span<const double> coeffs() const { return coeffs_; }
  std::span<double> coeffs() { return coeffs_; }
  double coeff(const MultiIndex& alpha) const;
  /// Partial derivative d^alpha f at the base point.
  double derivative(const MultiIndex& alpha) const;

  Jet truncated(int order) const;
  /// d/dx_var; the result has order one lower.
  Jet partial(int var) const;
  Jet zero_like() const { return Jet(*layout_, base_, 0.0); }

  Jet operator-() const;
  Jet& operator+=(const Jet& rhs);
  Jet& operator-=(const Jet& rhs);
  Jet& operator*=(const Jet& rhs);
  Jet& operator/=(const Jet& rhs);
  Jet& operator+=(double rhs);
  Jet& operator-=(double rhs);
  Jet& operator*=(double rhs);
  Jet& operator/=(double rhs);

  /// this += scale * a * b without materialising the product.
  void add_product(const Jet& a, const Jet& b, double scale = 1.0);

  friend bool compatible(const Jet& a, const Jet& b);

 private:
  const JetLayout* layout_ = nullptr;
  BasePoint base_{};
  std::vector<double> coeffs_;
};

/// Throws MismatchedJets unless a and b share dim, order and base point.
void require_compatible(const Jet& a, const Jet& b);

inline Jet operator+(Jet a, const Jet& b) { return a += b; }
inline Jet operator-(Jet a, const Jet& b) { return a -= b; }
inline Jet operator*(Jet a, const Jet& b) { return a *= b; }
inline Jet operator/(Jet a, const Jet& b) { return a /= b; }
inline Jet operator+(Jet a, double b) { return a += b; }
inline Jet operator-(Jet a, double b) { return a -= b; }
inline Jet operator*(Jet a, double b) { return a *= b; }
inline Jet operator/(Jet a, double b) { return a /= b; }
inline Jet operator+(double a, Jet b) { return b += a; }
inline Jet operator-(double a, const Jet& b) { return (-b) += a; }
inline Jet operator*(double a, Jet b) { return b *= a; }
Jet operator/(double a, const Jet& b);

Jet reciprocal(const Jet& a);
Jet sin(const Jet& a);
Jet cos(const Jet& a);
Jet exp(const Jet& a);
Jet log(const Jet& a);
Jet sqrt(const Jet& a);
Jet pow(const Jet& a, double p);
Jet pow(const Jet& a, int n);
Jet pow(const Jet& a, const Jet& b);

/// Evaluates sum_k series[k] * (a - a(x0))^k, i.e. composes a univariate
/// function (given by its Taylor coefficients at a(x0)) with a.
Jet compose(const Jet& a, std::span<const double> series);

inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.value(); }

// ---------------------------------------------------------------------------
// Finite-difference cross-check

using ScalarField = std::function<double(std::span<const double>)>;

inline constexpr double kDefaultFdStep = 1e-3;

/// Central-difference estimate of d^alpha f at point (total order <= 4), one
/// Richardson step combining step and step/2. Throws EvaluationSingular if any
/// stencil node evaluates to a non-finite value.
double finite_difference(const ScalarField& f, std::span<const double> point,
                         const MultiIndex& alpha, double step = kDefaultFdStep);

}  // namespace linein
