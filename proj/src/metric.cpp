#include "linein/metric.hpp"

#include <Eigen/Dense>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include "linein/errors.hpp"

namespace linein {

bool MetricSpec::contains(std::span<const double> point) const {
  if (static_cast<int>(point.size()) != dim) return false;
  for (int i = 0; i < dim; ++i)
    if (!safe_domain[i].contains(point[i])) return false;
  return true;
}

MetricSpec make_metric_spec(std::string name, std::vector<std::string> coords,
                            std::vector<Interval> domain, ParamTable params) {
  MetricSpec s;
  s.name = std::move(name);
  s.dim = static_cast<int>(coords.size());
  s.coord_names = std::move(coords);
  s.safe_domain = std::move(domain);
  s.params = std::move(params);
  s.components.assign(static_cast<std::size_t>(s.dim * s.dim), Expr::number(0.0));
  return s;
}

// ---------------------------------------------------------------------------
// DSL

namespace {

class LineCursor {
 public:
  LineCursor(std::string_view text, int line) : text_(text), line_(line) {}

  [[noreturn]] void fail(const std::string& expected) const {
    const std::string found =
        pos_ < text_.size() ? "'" + std::string(text_.substr(pos_, 1)) + "'" : "end of line";
    throw SyntaxError("line " + std::to_string(line_) + ", column " + std::to_string(pos_ + 1) +
                      ": expected " + expected + ", found " + found);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }
  void expect_end() {
    if (!at_end()) fail("end of line");
  }
  void expect(char c) {
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("'") + c + "'");
    ++pos_;
  }
  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  std::string word() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size()) {
      const auto c = static_cast<unsigned char>(text_[pos_]);
      if (std::isalnum(c) || c == '_' || c >= 0x80) ++pos_;
      else break;
    }
    if (pos_ == start) fail("identifier");
    return std::string(text_.substr(start, pos_ - start));
  }
  double real() {
    skip_space();
    const std::string rest(text_.substr(pos_));
    char* end = nullptr;
    const double v = std::strtod(rest.c_str(), &end);
    if (end == rest.c_str() || !std::isfinite(v)) fail("real number");
    pos_ += static_cast<std::size_t>(end - rest.c_str());
    return v;
  }
  long integer() {
    skip_space();
    const std::string rest(text_.substr(pos_));
    char* end = nullptr;
    const long v = std::strtol(rest.c_str(), &end, 10);
    if (end == rest.c_str()) fail("integer");
    pos_ += static_cast<std::size_t>(end - rest.c_str());
    return v;
  }
  std::size_t position() const { return pos_; }
  std::string_view rest() const { return text_.substr(pos_); }
  int line() const { return line_; }

 private:
  std::string_view text_;
  int line_;
  std::size_t pos_ = 0;
};

std::string semantic_at(int line, const std::string& msg) {
  return "line " + std::to_string(line) + ": " + msg;
}

struct ComponentLine {
  int line;
  int i, j;
  std::string text;
  int column;
};

}  // namespace

MetricSpec parse_metric_file(std::string_view text) {
  std::optional<int> dim;
  std::optional<std::vector<std::string>> coords;
  ParamTable params;
  std::vector<std::string> param_order;
  std::map<std::string, std::pair<Interval, int>> domains;
  std::optional<Signature> signature;
  std::string name = "user";
  std::vector<ComponentLine> component_lines;

  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    LineCursor cur(line, line_no);
    if (cur.at_end()) {
      if (end == text.size()) break;
      continue;
    }
    const std::string keyword = cur.word();
    if (keyword == "dim") {
      if (dim) throw SemanticError(semantic_at(line_no, "duplicate 'dim'"));
      const long n = cur.integer();
      cur.expect_end();
      if (n < 1 || n > kMaxDim)
        throw SemanticError(semantic_at(line_no, "dim must be between 1 and " + std::to_string(kMaxDim)));
      dim = static_cast<int>(n);
    } else if (keyword == "coords") {
      if (coords) throw SemanticError(semantic_at(line_no, "duplicate 'coords'"));
      std::vector<std::string> names;
      while (!cur.at_end()) names.push_back(cur.word());
      if (names.empty()) cur.fail("coordinate name");
      std::set<std::string> unique(names.begin(), names.end());
      if (unique.size() != names.size())
        throw SemanticError(semantic_at(line_no, "duplicate coordinate name"));
      coords = std::move(names);
    } else if (keyword == "param") {
      const std::string pname = cur.word();
      cur.expect('=');
      const double v = cur.real();
      cur.expect_end();
      if (!params.emplace(pname, v).second)
        throw SemanticError(semantic_at(line_no, "duplicate parameter '" + pname + "'"));
      param_order.push_back(pname);
    } else if (keyword == "g") {
      cur.expect('[');
      const long i = cur.integer();
      cur.expect(']');
      cur.expect('[');
      const long j = cur.integer();
      cur.expect(']');
      cur.expect('=');
      cur.skip_space();
      const auto column = static_cast<int>(cur.position());
      std::string expr_text(cur.rest());
      if (expr_text.find_first_not_of(" \t") == std::string::npos) cur.fail("expression");
      component_lines.push_back({line_no, static_cast<int>(i), static_cast<int>(j),
                                 std::move(expr_text), column});
    } else if (keyword == "domain") {
      const std::string coord = cur.word();
      if (cur.word() != "in") cur.fail("'in'");
      cur.expect('(');
      const double lo = cur.real();
      cur.expect(',');
      const double hi = cur.real();
      cur.expect(')');
      cur.expect_end();
      if (!(lo < hi))
        throw SemanticError(semantic_at(line_no, "empty domain for '" + coord + "'"));
      if (!domains.emplace(coord, std::make_pair(Interval{lo, hi}, line_no)).second)
        throw SemanticError(semantic_at(line_no, "duplicate domain for '" + coord + "'"));
    } else if (keyword == "signature") {
      const long p = cur.integer();
      const long q = cur.integer();
      cur.expect_end();
      signature = Signature{static_cast<int>(p), static_cast<int>(q)};
    } else if (keyword == "name") {
      name = cur.word();
      cur.expect_end();
    } else {
      throw SyntaxError("line " + std::to_string(line_no) + ", column 1: unknown directive '" +
                        keyword + "'");
    }
    if (end == text.size()) break;
  }

  if (!dim) throw SemanticError("missing 'dim' declaration");
  if (!coords) throw SemanticError("missing 'coords' declaration");
  if (static_cast<int>(coords->size()) != *dim)
    throw SemanticError("coords lists " + std::to_string(coords->size()) +
                        " names but dim is " + std::to_string(*dim));
  for (const auto& [coord, entry] : domains) {
    if (std::find(coords->begin(), coords->end(), coord) == coords->end())
      throw SemanticError(semantic_at(entry.second, "domain for unknown coordinate '" + coord + "'"));
  }
  std::vector<Interval> domain;
  for (const auto& c : *coords) {
    auto it = domains.find(c);
    if (it == domains.end()) throw SemanticError("missing domain for coordinate '" + c + "'");
    domain.push_back(it->second.first);
  }
  if (signature && signature->first + signature->second != *dim)
    throw SemanticError("signature does not sum to dim");

  MetricSpec spec = make_metric_spec(name, *coords, domain, params);
  spec.signature_hint = signature;

  std::map<std::pair<int, int>, std::string> assigned;
  for (const auto& cl : component_lines) {
    if (cl.i < 0 || cl.j < 0 || cl.i >= *dim || cl.j >= *dim)
      throw SemanticError(semantic_at(cl.line, "component index out of range"));
    Expr e;
    try {
      e = parse_expression(cl.text, *coords, param_order, cl.line, cl.column);
    } catch (const UnknownSymbol& ex) {
      throw SemanticError(ex.what());
    }
    std::string norm = cl.text;
    norm.erase(std::remove_if(norm.begin(), norm.end(),
                              [](unsigned char c) { return std::isspace(c); }),
               norm.end());
    if (assigned.count({cl.i, cl.j}))
      throw SemanticError(semantic_at(cl.line, "duplicate assignment to g[" + std::to_string(cl.i) +
                                                   "][" + std::to_string(cl.j) + "]"));
    if (auto mirror = assigned.find({cl.j, cl.i}); mirror != assigned.end()) {
      if (mirror->second != norm)
        throw SemanticError(semantic_at(cl.line, "asymmetric redefinition of g[" +
                                                     std::to_string(cl.j) + "][" +
                                                     std::to_string(cl.i) + "]"));
      assigned.emplace(std::make_pair(cl.i, cl.j), norm);
      continue;
    }
    assigned.emplace(std::make_pair(cl.i, cl.j), norm);
    spec.set_component(cl.i, cl.j, e);
  }
  return spec;
}

namespace {

std::string real_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_dsl(const MetricSpec& spec) {
  std::ostringstream os;
  os << "name " << spec.name << "\n";
  os << "dim " << spec.dim << "\n";
  os << "coords";
  for (const auto& c : spec.coord_names) os << " " << c;
  os << "\n";
  for (const auto& [k, v] : spec.params) os << "param " << k << " = " << real_text(v) << "\n";
  if (spec.signature_hint)
    os << "signature " << spec.signature_hint->first << " " << spec.signature_hint->second << "\n";
  for (int a = 0; a < spec.dim; ++a)
    for (int b = a; b < spec.dim; ++b)
      if (!spec.component(a, b).is_number(0.0))
        os << "g[" << a << "][" << b << "] = " << to_string(spec.component(a, b), spec.coord_names)
           << "\n";
  for (int i = 0; i < spec.dim; ++i)
    os << "domain " << spec.coord_names[i] << " in (" << real_text(spec.safe_domain[i].lo) << ", "
       << real_text(spec.safe_domain[i].hi) << ")\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Builtin catalog

namespace {

constexpr Interval kPolar{0.2, 2.94};
constexpr Interval kAzimuth{0.0, 6.28};
constexpr Interval kUnit{-1.0, 1.0};

Expr num(double v) { return Expr::number(v); }
Expr sq(const Expr& e) { return pow(e, num(2.0)); }

}  // namespace

const std::vector<BackgroundInfo>& builtin_catalog() {
  static const std::vector<BackgroundInfo> catalog = {
      {"flat_euclidean", 1, kMaxDim, {}, {}, BackgroundStatus::Flat,
       "Euclidean metric in Cartesian coordinates"},
      {"flat_minkowski", 2, kMaxDim, {}, {}, BackgroundStatus::Flat,
       "Minkowski metric diag(-1, 1, ...) in inertial coordinates"},
      {"sphere", 2, kMaxDim, {"r"}, {{"r", 1.0}}, BackgroundStatus::ConstantCurvature,
       "round sphere of radius r in hyperspherical angles"},
      {"hyperbolic", 2, kMaxDim, {"r"}, {{"r", 1.0}}, BackgroundStatus::ConstantCurvature,
       "hyperbolic space of radius r, upper half-space model r^2/y^2 (dx^2 + ... + dy^2)"},
      {"de_sitter_static", 4, 4, {"lambda"}, {{"lambda", 1.0}},
       BackgroundStatus::ConstantCurvature,
       "static patch of de Sitter space, f = 1 - lambda r^2/3"},
      {"schwarzschild", 4, 4, {"m"}, {{"m", 1.0}}, BackgroundStatus::EinsteinOnly,
       "Schwarzschild exterior in Schwarzschild coordinates, f = 1 - 2m/r"},
  };
  return catalog;
}

const BackgroundInfo& builtin_info(std::string_view name) {
  for (const auto& b : builtin_catalog())
    if (b.name == name) return b;
  throw UnknownBackground("unknown background '" + std::string(name) + "'");
}

MetricSpec builtin_background(std::string_view name, int dim, const ParamTable& params) {
  const BackgroundInfo& info = builtin_info(name);
  if (dim < info.min_dim || dim > info.max_dim)
    throw BadDimension(info.name + " requires dim in [" + std::to_string(info.min_dim) + ", " +
                       std::to_string(info.max_dim) + "], got " + std::to_string(dim));
  ParamTable p;
  for (const auto& req : info.required_params) {
    auto it = params.find(req);
    if (it == params.end()) throw MissingParam(info.name + " requires parameter '" + req + "'");
    if (!(it->second > 0.0)) throw SemanticError(info.name + ": parameter '" + req + "' must be positive");
    p[req] = it->second;
  }

  const std::string spec_name = info.name + "_" + std::to_string(dim) + "d";
  if (info.name == "flat_euclidean" || info.name == "flat_minkowski") {
    const bool lorentz = info.name == "flat_minkowski";
    static const char* euclid_names[] = {"x", "y", "z", "w", "v", "u"};
    static const char* lorentz_names[] = {"t", "x", "y", "z", "w", "v"};
    std::vector<std::string> coords;
    for (int i = 0; i < dim; ++i) coords.push_back(lorentz ? lorentz_names[i] : euclid_names[i]);
    MetricSpec s = make_metric_spec(spec_name, coords, std::vector<Interval>(dim, kUnit), p);
    for (int i = 0; i < dim; ++i) s.set_component(i, i, num(lorentz && i == 0 ? -1.0 : 1.0));
    s.signature_hint = lorentz ? Signature{dim - 1, 1} : Signature{dim, 0};
    return s;
  }
  if (info.name == "sphere") {
    std::vector<std::string> coords;
    std::vector<Interval> domain;
    for (int i = 0; i < dim - 1; ++i) {
      coords.push_back(dim == 2 ? "theta" : "theta" + std::to_string(i + 1));
      domain.push_back(kPolar);
    }
    coords.push_back("phi");
    domain.push_back(kAzimuth);
    MetricSpec s = make_metric_spec(spec_name, coords, domain, p);
    Expr factor = sq(Expr::param("r"));
    for (int i = 0; i < dim; ++i) {
      s.set_component(i, i, factor);
      if (i < dim - 1) factor = factor * sq(Expr::call(Function::Sin, Expr::coord(i)));
    }
    s.signature_hint = Signature{dim, 0};
    return s;
  }
  if (info.name == "hyperbolic") {
    std::vector<std::string> coords;
    std::vector<Interval> domain(dim, kUnit);
    for (int i = 0; i < dim - 1; ++i) coords.push_back("x" + std::to_string(i + 1));
    coords.push_back("y");
    domain.back() = Interval{0.5, 2.0};
    MetricSpec s = make_metric_spec(spec_name, coords, domain, p);
    const Expr conformal = sq(Expr::param("r")) / sq(Expr::coord(dim - 1));
    for (int i = 0; i < dim; ++i) s.set_component(i, i, conformal);
    s.signature_hint = Signature{dim, 0};
    return s;
  }

  // the two static spherically symmetric 4-metrics
  const Expr r = Expr::coord(1);
  const Expr theta = Expr::coord(2);
  Expr f;
  Interval radial;
  if (info.name == "de_sitter_static") {
    f = num(1.0) - Expr::param("lambda") * sq(r) / num(3.0);
    const double horizon = std::sqrt(3.0 / p["lambda"]);
    radial = {0.2 * horizon, 0.8 * horizon};
  } else {
    f = num(1.0) - num(2.0) * Expr::param("m") / r;
    radial = {3.0 * p["m"], 10.0 * p["m"]};
  }
  MetricSpec s = make_metric_spec(spec_name, {"t", "r", "theta", "phi"},
                                  {kUnit, radial, kPolar, kAzimuth}, p);
  s.set_component(0, 0, -f);
  s.set_component(1, 1, num(1.0) / f);
  s.set_component(2, 2, sq(r));
  s.set_component(3, 3, sq(r) * sq(Expr::call(Function::Sin, theta)));
  s.signature_hint = Signature{3, 1};
  return s;
}

// ---------------------------------------------------------------------------

Signature infer_signature(const RealTensor& g) {
  const int n = g.dim();
  Eigen::MatrixXd m(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) m(a, b) = g(a, b);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  Signature s{0, 0};
  for (int i = 0; i < n; ++i) (solver.eigenvalues()(i) > 0 ? s.first : s.second) += 1;
  return s;
}

JetTensor invert_jet_matrix(const JetTensor& m) {
  const int n = m.dim();
  JetTensor a = m;
  const Jet zero = m[0].zero_like();
  JetTensor inv(n, contravariant(2), zero);
  for (int i = 0; i < n; ++i) inv(i, i) += 1.0;

  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a(r, col).value()) > std::abs(a(pivot, col).value())) pivot = r;
    if (a(pivot, col).value() == 0.0) throw DegenerateMetric("singular metric matrix");
    if (pivot != col)
      for (int k = 0; k < n; ++k) {
        std::swap(a(pivot, k), a(col, k));
        std::swap(inv(pivot, k), inv(col, k));
      }
    const Jet pinv = reciprocal(a(col, col));
    for (int k = 0; k < n; ++k) {
      a(col, k) *= pinv;
      inv(col, k) *= pinv;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const Jet factor = a(r, col);
      for (int k = 0; k < n; ++k) {
        a(r, k).add_product(factor, a(col, k), -1.0);
        inv(r, k).add_product(factor, inv(col, k), -1.0);
      }
    }
  }
  // symmetrise away roundoff so g^ab == g^ba exactly
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Jet avg = inv(i, j) + inv(j, i);
      avg *= 0.5;
      inv(i, j) = avg;
      inv(j, i) = avg;
    }
  return inv;
}

MetricAtPoint evaluate_metric_jet_unchecked(const MetricSpec& spec, std::span<const double> point,
                                            int order) {
  if (static_cast<int>(point.size()) != spec.dim)
    throw OutsideDomain("point has " + std::to_string(point.size()) + " coordinates, metric has dim " +
                        std::to_string(spec.dim));
  const int n = spec.dim;
  MetricAtPoint m;
  m.point.assign(point.begin(), point.end());
  const Jet zero = Jet::constant(n, order, point, 0.0);
  m.g_jet = JetTensor(n, covariant(2), zero);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      const Expr& e = spec.component(a, b);
      Jet j = e.is_number(0.0) ? zero : evaluate_jet(e, spec.params, point, order);
      m.g_jet(a, b) = j;
      m.g_jet(b, a) = std::move(j);
    }
  m.g = values(m.g_jet);

  Eigen::MatrixXd gm(n, n);
  double scale = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      gm(a, b) = m.g(a, b);
      scale = std::max(scale, std::abs(m.g(a, b)));
    }
  m.det = gm.determinant();
  if (!(std::abs(m.det) > 1e-12 * std::pow(scale, n)))
    throw DegenerateMetric("metric determinant " + std::to_string(m.det) + " below nondegeneracy floor");

  m.g_inv_jet = invert_jet_matrix(m.g_jet);
  m.g_inv = values(m.g_inv_jet);
  return m;
}

MetricAtPoint evaluate_metric_jet(const MetricSpec& spec, std::span<const double> point, int order) {
  if (!spec.contains(point)) {
    std::string where;
    for (double x : point) where += (where.empty() ? "" : ", ") + std::to_string(x);
    throw OutsideDomain("point (" + where + ") outside safe domain of " + spec.name);
  }
  return evaluate_metric_jet_unchecked(spec, point, order);
}

RealTensor adjust_index(const RealTensor& t, int slot, IndexMove move, const MetricAtPoint& m) {
  return adjust_index(t, slot, move, m.g, m.g_inv);
}

JetTensor adjust_index(const JetTensor& t, int slot, IndexMove move, const MetricAtPoint& m) {
  const int order = jet_order(t);
  return adjust_index(t, slot, move, truncated(m.g_jet, order), truncated(m.g_inv_jet, order));
}

}  // namespace linein
