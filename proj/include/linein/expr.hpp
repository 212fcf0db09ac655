#pragma once

// Scalar expressions over chart coordinates and named parameters: the
// expression language of the metric DSL, evaluable to doubles or to jets and
// differentiable symbolically.

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "linein/jet.hpp"

namespace linein {

using ParamTable = std::map<std::string, double>;

enum class Function { Sin, Cos, Exp, Sqrt, Log };

class Expr {
 public:
  enum class Kind { Number, Coord, Param, Neg, Add, Sub, Mul, Div, Pow, Call };

  Expr();  // the number 0

  static Expr number(double v);
  static Expr coord(int index);
  static Expr param(std::string name);
  static Expr call(Function fn, Expr arg);

  Kind kind() const;
  double number_value() const;
  int coord_index() const;
  const std::string& param_name() const;
  Function function() const;
  const Expr& lhs() const;  // also the operand of Neg and Call
  const Expr& rhs() const;

  /// True when the expression references no coordinate.
  bool is_constant() const;
  bool is_number(double v) const;

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Expr make(Kind kind, Expr a, Expr b);
  friend Expr operator-(const Expr& a);
  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr pow(const Expr& a, const Expr& b);

  std::shared_ptr<const Node> node_;
};

// The constructors below fold trivial constants (0 + a, 1 * a, number op number).
Expr operator-(const Expr& a);
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr pow(const Expr& a, const Expr& b);

/// Parses one expression. Identifiers resolve to coordinates first, then to
/// parameter names; anything else raises UnknownSymbol. line/column_offset
/// only shift the positions reported in diagnostics.
Expr parse_expression(std::string_view text, const std::vector<std::string>& coord_names,
                      const std::vector<std::string>& param_names, int line = 1,
                      int column_offset = 0);

double evaluate(const Expr& e, const ParamTable& params, std::span<const double> point);

/// Taylor jet of e at point to the given order.
Jet evaluate_jet(const Expr& e, const ParamTable& params, std::span<const double> point,
                 int order);

Expr differentiate(const Expr& e, int coord);

/// Text that parse_expression reads back to the same function; reals are
/// printed with 17 significant digits.
std::string to_string(const Expr& e, const std::vector<std::string>& coord_names);

/// Finite-difference estimate of d^alpha e at point.
double finite_difference(const Expr& e, const ParamTable& params, std::span<const double> point,
                         const MultiIndex& alpha, double step = kDefaultFdStep);

}  // namespace linein
