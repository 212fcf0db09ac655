#include "linein/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

#include "linein/errors.hpp"

namespace linein {

struct Expr::Node {
  Kind kind = Kind::Number;
  double value = 0.0;
  int coord = -1;
  std::string name;
  Function fn = Function::Sin;
  bool constant = true;
  std::vector<Expr> args;
};

namespace {

const char* function_name(Function fn) {
  switch (fn) {
    case Function::Sin: return "sin";
    case Function::Cos: return "cos";
    case Function::Exp: return "exp";
    case Function::Sqrt: return "sqrt";
    case Function::Log: return "log";
  }
  return "?";
}

bool lookup_function(std::string_view name, Function& fn) {
  static const std::pair<const char*, Function> table[] = {
      {"sin", Function::Sin}, {"cos", Function::Cos},   {"exp", Function::Exp},
      {"sqrt", Function::Sqrt}, {"log", Function::Log},
  };
  for (const auto& [n, f] : table)
    if (name == n) {
      fn = f;
      return true;
    }
  return false;
}

}  // namespace

Expr::Expr() : Expr(number(0.0)) {}

Expr Expr::number(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Number;
  n->value = v;
  return Expr(std::move(n));
}

Expr Expr::coord(int index) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Coord;
  n->coord = index;
  n->constant = false;
  return Expr(std::move(n));
}

Expr Expr::param(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Param;
  n->name = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::call(Function fn, Expr arg) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Call;
  n->fn = fn;
  n->constant = arg.is_constant();
  n->args.push_back(std::move(arg));
  return Expr(std::move(n));
}

Expr Expr::make(Kind kind, Expr a, Expr b) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->constant = a.is_constant() && (kind == Kind::Neg || b.is_constant());
  n->args.push_back(std::move(a));
  if (kind != Kind::Neg) n->args.push_back(std::move(b));
  return Expr(std::move(n));
}

Expr::Kind Expr::kind() const { return node_->kind; }
double Expr::number_value() const { return node_->value; }
int Expr::coord_index() const { return node_->coord; }
const std::string& Expr::param_name() const { return node_->name; }
Function Expr::function() const { return node_->fn; }
const Expr& Expr::lhs() const { return node_->args.at(0); }
const Expr& Expr::rhs() const { return node_->args.at(1); }
bool Expr::is_constant() const { return node_->constant; }
bool Expr::is_number(double v) const { return node_->kind == Kind::Number && node_->value == v; }

Expr operator-(const Expr& a) {
  if (a.kind() == Expr::Kind::Number) return Expr::number(-a.number_value());
  if (a.kind() == Expr::Kind::Neg) return a.lhs();
  return Expr::make(Expr::Kind::Neg, a, Expr());
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_number(0.0)) return b;
  if (b.is_number(0.0)) return a;
  if (a.kind() == Expr::Kind::Number && b.kind() == Expr::Kind::Number)
    return Expr::number(a.number_value() + b.number_value());
  return Expr::make(Expr::Kind::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (b.is_number(0.0)) return a;
  if (a.is_number(0.0)) return -b;
  if (a.kind() == Expr::Kind::Number && b.kind() == Expr::Kind::Number)
    return Expr::number(a.number_value() - b.number_value());
  return Expr::make(Expr::Kind::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_number(0.0) || b.is_number(0.0)) return Expr::number(0.0);
  if (a.is_number(1.0)) return b;
  if (b.is_number(1.0)) return a;
  if (a.kind() == Expr::Kind::Number && b.kind() == Expr::Kind::Number)
    return Expr::number(a.number_value() * b.number_value());
  return Expr::make(Expr::Kind::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (b.is_number(1.0)) return a;
  if (a.is_number(0.0) && !b.is_number(0.0)) return Expr::number(0.0);
  return Expr::make(Expr::Kind::Div, a, b);
}

Expr pow(const Expr& a, const Expr& b) {
  if (b.is_number(0.0)) return Expr::number(1.0);
  if (b.is_number(1.0)) return a;
  return Expr::make(Expr::Kind::Pow, a, b);
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& coords,
         const std::vector<std::string>& params, int line, int column_offset)
      : text_(text), coords_(coords), params_(params), line_(line), col0_(column_offset) {}

  Expr parse() {
    Expr e = parse_sum();
    skip_space();
    if (pos_ != text_.size()) fail("operator or end of expression");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& expected) const {
    std::string found = pos_ < text_.size() ? "'" + std::string(1, text_[pos_]) + "'"
                                            : std::string("end of input");
    throw SyntaxError("line " + std::to_string(line_) + ", column " +
                      std::to_string(col0_ + pos_ + 1) + ": expected " + expected + ", found " +
                      found);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' ||
           static_cast<unsigned char>(c) >= 0x80;
  }
  static bool ident_char(char c) {
    return ident_start(c) || std::isdigit(static_cast<unsigned char>(c));
  }

  Expr parse_sum() {
    Expr e = parse_product();
    while (true) {
      if (accept('+')) e = Expr(e) + parse_product();
      else if (accept('-')) e = Expr(e) - parse_product();
      else return e;
    }
  }

  Expr parse_product() {
    Expr e = parse_unary();
    while (true) {
      if (accept('*')) e = e * parse_unary();
      else if (accept('/')) e = e / parse_unary();
      else return e;
    }
  }

  Expr parse_unary() {
    if (accept('-')) return -parse_unary();
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (accept('^')) return pow(base, parse_unary());
    return base;
  }

  Expr parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("number, identifier or '('");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = parse_sum();
      if (!accept(')')) fail("')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::string rest(text_.substr(pos_));
      char* end = nullptr;
      const double v = std::strtod(rest.c_str(), &end);
      if (end == rest.c_str()) fail("number");
      pos_ += static_cast<std::size_t>(end - rest.c_str());
      return Expr::number(v);
    }
    if (ident_start(c)) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
      const std::string name(text_.substr(start, pos_ - start));
      Function fn;
      if (lookup_function(name, fn)) {
        if (!accept('(')) fail("'(' after function name");
        Expr arg = parse_sum();
        if (!accept(')')) fail("')'");
        return Expr::call(fn, arg);
      }
      for (std::size_t i = 0; i < coords_.size(); ++i)
        if (coords_[i] == name) return Expr::coord(static_cast<int>(i));
      for (const auto& p : params_)
        if (p == name) return Expr::param(name);
      throw UnknownSymbol("line " + std::to_string(line_) + ", column " +
                          std::to_string(col0_ + start + 1) + ": unknown symbol '" + name + "'");
    }
    fail("number, identifier or '('");
  }

  std::string_view text_;
  const std::vector<std::string>& coords_;
  const std::vector<std::string>& params_;
  int line_;
  int col0_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expression(std::string_view text, const std::vector<std::string>& coord_names,
                      const std::vector<std::string>& param_names, int line, int column_offset) {
  return Parser(text, coord_names, param_names, line, column_offset).parse();
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

double param_value(const Expr& e, const ParamTable& params) {
  auto it = params.find(e.param_name());
  if (it == params.end()) throw UnknownSymbol("unknown parameter '" + e.param_name() + "'");
  return it->second;
}

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw EvaluationSingular(std::string(what) + " is not finite");
  return v;
}

}  // namespace

double evaluate(const Expr& e, const ParamTable& params, std::span<const double> point) {
  using K = Expr::Kind;
  switch (e.kind()) {
    case K::Number: return e.number_value();
    case K::Coord:
      if (e.coord_index() >= static_cast<int>(point.size()))
        throw UnknownSymbol("coordinate index out of range");
      return point[e.coord_index()];
    case K::Param: return param_value(e, params);
    case K::Neg: return -evaluate(e.lhs(), params, point);
    case K::Add: return evaluate(e.lhs(), params, point) + evaluate(e.rhs(), params, point);
    case K::Sub: return evaluate(e.lhs(), params, point) - evaluate(e.rhs(), params, point);
    case K::Mul: return evaluate(e.lhs(), params, point) * evaluate(e.rhs(), params, point);
    case K::Div: {
      const double d = evaluate(e.rhs(), params, point);
      if (d == 0.0) throw EvaluationSingular("division by zero");
      return checked(evaluate(e.lhs(), params, point) / d, "quotient");
    }
    case K::Pow: {
      const double b = evaluate(e.lhs(), params, point);
      const double p = evaluate(e.rhs(), params, point);
      if (b < 0.0 && p != std::round(p))
        throw EvaluationSingular("fractional power of negative value");
      if (b == 0.0 && p < 0.0) throw EvaluationSingular("negative power of zero");
      return checked(std::pow(b, p), "power");
    }
    case K::Call: {
      const double a = evaluate(e.lhs(), params, point);
      switch (e.function()) {
        case Function::Sin: return std::sin(a);
        case Function::Cos: return std::cos(a);
        case Function::Exp: return checked(std::exp(a), "exp");
        case Function::Sqrt:
          if (a < 0.0) throw EvaluationSingular("sqrt of negative value");
          return std::sqrt(a);
        case Function::Log:
          if (!(a > 0.0)) throw EvaluationSingular("log of non-positive value");
          return std::log(a);
      }
    }
  }
  throw std::logic_error("unhandled expression kind");
}

namespace {

Jet jet_eval(const Expr& e, const ParamTable& params, std::span<const double> point, int dim,
             int order) {
  using K = Expr::Kind;
  switch (e.kind()) {
    case K::Number: return Jet::constant(dim, order, point, e.number_value());
    case K::Coord:
      if (e.coord_index() >= dim) throw UnknownSymbol("coordinate index out of range");
      return Jet::variable(dim, order, point, e.coord_index());
    case K::Param: return Jet::constant(dim, order, point, param_value(e, params));
    case K::Neg: return -jet_eval(e.lhs(), params, point, dim, order);
    case K::Add:
      return jet_eval(e.lhs(), params, point, dim, order) +
             jet_eval(e.rhs(), params, point, dim, order);
    case K::Sub:
      return jet_eval(e.lhs(), params, point, dim, order) -
             jet_eval(e.rhs(), params, point, dim, order);
    case K::Mul:
      if (e.lhs().is_constant())
        return evaluate(e.lhs(), params, point) * jet_eval(e.rhs(), params, point, dim, order);
      return jet_eval(e.lhs(), params, point, dim, order) *
             jet_eval(e.rhs(), params, point, dim, order);
    case K::Div:
      if (e.rhs().is_constant()) {
        const double d = evaluate(e.rhs(), params, point);
        if (d == 0.0) throw EvaluationSingular("division by zero");
        return jet_eval(e.lhs(), params, point, dim, order) / d;
      }
      return jet_eval(e.lhs(), params, point, dim, order) /
             jet_eval(e.rhs(), params, point, dim, order);
    case K::Pow: {
      Jet base = jet_eval(e.lhs(), params, point, dim, order);
      if (e.rhs().is_constant()) {
        const double p = evaluate(e.rhs(), params, point);
        if (base.value() < 0.0 && p != std::round(p))
          throw EvaluationSingular("fractional power of negative value");
        return pow(base, p);
      }
      return pow(base, jet_eval(e.rhs(), params, point, dim, order));
    }
    case K::Call: {
      Jet a = jet_eval(e.lhs(), params, point, dim, order);
      switch (e.function()) {
        case Function::Sin: return sin(a);
        case Function::Cos: return cos(a);
        case Function::Exp: return exp(a);
        case Function::Sqrt: return sqrt(a);
        case Function::Log: return log(a);
      }
    }
  }
  throw std::logic_error("unhandled expression kind");
}

}  // namespace

Jet evaluate_jet(const Expr& e, const ParamTable& params, std::span<const double> point,
                 int order) {
  Jet j = jet_eval(e, params, point, static_cast<int>(point.size()), order);
  for (double c : j.coeffs())
    if (!std::isfinite(c)) throw EvaluationSingular("non-finite Taylor coefficient");
  return j;
}

// ---------------------------------------------------------------------------

Expr differentiate(const Expr& e, int coord) {
  using K = Expr::Kind;
  if (e.is_constant()) return Expr::number(0.0);
  switch (e.kind()) {
    case K::Number:
    case K::Param: return Expr::number(0.0);
    case K::Coord: return Expr::number(e.coord_index() == coord ? 1.0 : 0.0);
    case K::Neg: return -differentiate(e.lhs(), coord);
    case K::Add: return differentiate(e.lhs(), coord) + differentiate(e.rhs(), coord);
    case K::Sub: return differentiate(e.lhs(), coord) - differentiate(e.rhs(), coord);
    case K::Mul:
      return differentiate(e.lhs(), coord) * e.rhs() + e.lhs() * differentiate(e.rhs(), coord);
    case K::Div: {
      const Expr& a = e.lhs();
      const Expr& b = e.rhs();
      return differentiate(a, coord) / b -
             a * differentiate(b, coord) / pow(b, Expr::number(2.0));
    }
    case K::Pow: {
      const Expr& a = e.lhs();
      const Expr& b = e.rhs();
      if (b.is_constant())
        return b * pow(a, b - Expr::number(1.0)) * differentiate(a, coord);
      return e * (differentiate(b, coord) * Expr::call(Function::Log, a) +
                  b * differentiate(a, coord) / a);
    }
    case K::Call: {
      const Expr& a = e.lhs();
      const Expr da = differentiate(a, coord);
      switch (e.function()) {
        case Function::Sin: return Expr::call(Function::Cos, a) * da;
        case Function::Cos: return -(Expr::call(Function::Sin, a) * da);
        case Function::Exp: return e * da;
        case Function::Sqrt: return da / (Expr::number(2.0) * e);
        case Function::Log: return da / a;
      }
    }
  }
  throw std::logic_error("unhandled expression kind");
}

// ---------------------------------------------------------------------------

namespace {

int precedence(const Expr& e) {
  using K = Expr::Kind;
  switch (e.kind()) {
    case K::Add:
    case K::Sub: return 1;
    case K::Mul:
    case K::Div: return 2;
    case K::Neg: return 3;
    case K::Pow: return 4;
    case K::Number: return e.number_value() < 0.0 ? 3 : 5;
    default: return 5;
  }
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string print(const Expr& e, const std::vector<std::string>& names);

std::string wrap(const Expr& e, const std::vector<std::string>& names, int min_prec) {
  std::string s = print(e, names);
  return precedence(e) < min_prec ? "(" + s + ")" : s;
}

std::string print(const Expr& e, const std::vector<std::string>& names) {
  using K = Expr::Kind;
  switch (e.kind()) {
    case K::Number: return format_real(e.number_value());
    case K::Coord:
      return e.coord_index() < static_cast<int>(names.size()) ? names[e.coord_index()]
                                                               : "x" + std::to_string(e.coord_index());
    case K::Param: return e.param_name();
    case K::Neg: return "-" + wrap(e.lhs(), names, 4);
    case K::Add: return wrap(e.lhs(), names, 1) + " + " + wrap(e.rhs(), names, 2);
    case K::Sub: return wrap(e.lhs(), names, 1) + " - " + wrap(e.rhs(), names, 2);
    case K::Mul: return wrap(e.lhs(), names, 2) + "*" + wrap(e.rhs(), names, 3);
    case K::Div: return wrap(e.lhs(), names, 2) + "/" + wrap(e.rhs(), names, 5);
    case K::Pow: return wrap(e.lhs(), names, 5) + "^" + wrap(e.rhs(), names, 4);
    case K::Call: return std::string(function_name(e.function())) + "(" + print(e.lhs(), names) + ")";
  }
  return "?";
}

}  // namespace

std::string to_string(const Expr& e, const std::vector<std::string>& coord_names) {
  return print(e, coord_names);
}

double finite_difference(const Expr& e, const ParamTable& params, std::span<const double> point,
                         const MultiIndex& alpha, double step) {
  return finite_difference([&](std::span<const double> x) { return evaluate(e, params, x); },
                           point, alpha, step);
}

}  // namespace linein
