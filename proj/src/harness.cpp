#include "linein/harness.hpp"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "linein/errors.hpp"
#include "linein/fields.hpp"
#include "linein/geometry.hpp"
#include "linein/operators.hpp"

namespace linein {

// ---------------------------------------------------------------------------
// Backgrounds

Background builtin(const std::string& name, int dim, const ParamTable& params) {
  const BackgroundInfo& info = builtin_info(name);
  ParamTable merged = info.default_params;
  for (const auto& [k, v] : params)
    if (merged.count(k)) merged[k] = v;
  Background bg;
  bg.spec = builtin_background(name, dim, merged);
  bg.label = name + ":" + std::to_string(dim);
  bg.catalog_status = info.status;
  return bg;
}

Background load_metric_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UnknownBackground("cannot read metric file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  Background bg;
  bg.spec = parse_metric_file(ss.str());
  bg.label = bg.spec.name.empty() ? std::filesystem::path(path).stem().string() : bg.spec.name;
  if (bg.spec.name.empty()) bg.spec.name = bg.label;
  return bg;
}

std::vector<Background> resolve_backgrounds(const std::string& which, std::optional<int> dim,
                                            const ParamTable& params) {
  std::vector<Background> out;
  if (which == "all") {
    for (const char* name : {"sphere", "hyperbolic", "flat_euclidean", "flat_minkowski"})
      for (int d = 2; d <= 4; ++d)
        if (!dim || *dim == d) out.push_back(builtin(name, d, params));
    for (const char* name : {"de_sitter_static", "schwarzschild"})
      if (!dim || *dim == 4) out.push_back(builtin(name, 4, params));
    if (out.empty()) throw BadDimension("no builtin background in 'all' has dim " + std::to_string(*dim));
    return out;
  }
  const bool is_path = which.find('/') != std::string::npos ||
                       (which.size() > 7 && which.ends_with(".metric")) ||
                       std::filesystem::exists(which);
  if (is_path) {
    Background bg = load_metric_file(which);
    if (dim && *dim != bg.spec.dim)
      throw BadDimension("metric file has dim " + std::to_string(bg.spec.dim) + ", --dim asked for " +
                         std::to_string(*dim));
    out.push_back(std::move(bg));
    return out;
  }
  const BackgroundInfo& info = builtin_info(which);
  if (dim) {
    out.push_back(builtin(which, *dim, params));
  } else {
    for (int d = std::max(2, info.min_dim); d <= std::min(4, info.max_dim); ++d)
      out.push_back(builtin(which, d, params));
  }
  return out;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"complex", "dichotomy", "perturbation", "kernel",
                                                 "internal"};
  return names;
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Pass: return "PASS";
    case Status::Fail: return "FAIL";
    case Status::Error: return "ERROR";
  }
  return "?";
}

namespace {

Status worst(Status a, Status b) {
  if (a == Status::Error || b == Status::Error) return Status::Error;
  if (a == Status::Fail || b == Status::Fail) return Status::Fail;
  return Status::Pass;
}

}  // namespace

Status VerificationReport::status() const {
  Status s = Status::Pass;
  for (const auto& c : checks) s = worst(s, c.status);
  for (const auto& c : slopes) s = worst(s, c.status);
  return s;
}

const CheckResult* VerificationReport::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

const SlopeResult* VerificationReport::slope(const std::string& name) const {
  for (const auto& s : slopes)
    if (s.name == name) return &s;
  return nullptr;
}

Status SuiteRun::status() const {
  Status s = Status::Pass;
  for (const auto& r : reports) s = worst(s, r.status());
  return s;
}

// ---------------------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

double rel(double residual, double scale) { return scale > 0.0 ? residual / scale : residual; }

struct CheckDef {
  std::string name;
  double tolerance;
  Comparison comparison = Comparison::Below;
};

struct SlopeDef {
  std::string name;
  double lo;
  double hi;
  bool saturation_passes;
};

struct Sample {
  std::string name;
  double residual;
  double scale;
  std::string where;
};

struct SlopeSample {
  std::string name;
  SlopeFit fit;
  std::string where;
};

struct TaskOut {
  std::vector<Sample> samples;
  std::vector<SlopeSample> slopes;
  std::vector<std::pair<std::string, std::string>> errors;
  std::vector<std::string> notes;
  std::vector<int> halvings;
  double seconds = 0.0;

  void record(std::string name, double residual, double scale, std::string where) {
    samples.push_back({std::move(name), rel(residual, scale), scale, std::move(where)});
  }
  void slope(std::string name, SlopeFit fit, std::string where) {
    slopes.push_back({std::move(name), std::move(fit), std::move(where)});
  }
};

struct Plan {
  std::vector<CheckDef> checks;
  std::vector<SlopeDef> slopes;
  std::vector<std::string> notes;
  TaskOut background_level;
  bool skip = false;

  void check(std::string name, double tol, Comparison cmp = Comparison::Below) {
    checks.push_back({std::move(name), tol, cmp});
  }
  void slope(std::string name, double lo, double hi, bool saturation_passes) {
    slopes.push_back({std::move(name), lo, hi, saturation_passes});
  }
};

struct Context {
  const Background* bg = nullptr;
  std::vector<std::vector<double>> points;
  std::vector<std::optional<CurvaturePack>> packs;
  std::vector<std::string> pack_errors;
  std::optional<EinsteinCertificate> cert;
  std::string cert_error;
  std::optional<Signature> signature;
  bool flat = false;
  bool curved = false;
};

std::string where(std::size_t point, int field = -1) {
  std::string s = "point " + std::to_string(point);
  if (field >= 0) s += " field " + std::to_string(field);
  return s;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string describe(const std::exception& e) {
  if (auto* le = dynamic_cast<const Error*>(&e)) return std::string(le->kind()) + ": " + e.what();
  return e.what();
}

std::vector<std::string> names_of(const Plan& plan) {
  std::vector<std::string> out;
  for (const auto& c : plan.checks) out.push_back(c.name);
  for (const auto& s : plan.slopes) out.push_back(s.name);
  return out;
}

/// Runs body; any exception marks every check and slope in `names` as ERROR.
template <class F>
void guarded(TaskOut& out, const std::vector<std::string>& names, const std::string& at, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    for (const auto& n : names) out.errors.emplace_back(n, at + ": " + describe(e));
  }
}

// ---------------------------------------------------------------------------
// epsilon ladder

/// Largest relative size eps * rho(g^-1 h) allowed at the top of the ladder.
constexpr double kLinearRegime = 0.02;

struct LadderProbe {
  const MetricSpec& spec;
  Eigen::MatrixXd g;
  Eigen::MatrixXd h;
  double rho = 0.0;

  LadderProbe(const MetricSpec& s, std::span<const Expr> hx, std::span<const double> point)
      : spec(s), g(s.dim, s.dim), h(s.dim, s.dim) {
    const int n = s.dim;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        g(a, b) = evaluate(s.component(a, b), s.params, point);
        h(a, b) = evaluate(hx[a * n + b], s.params, point);
      }
    const Eigen::MatrixXd m = g.inverse() * h;
    rho = m.eigenvalues().cwiseAbs().maxCoeff();
  }

  bool accepts(double eps, const std::optional<Signature>& sig) const {
    if (eps * rho > kLinearRegime) return false;
    const int n = spec.dim;
    const Eigen::MatrixXd gt = g + eps * h;
    const double scale = gt.cwiseAbs().maxCoeff();
    if (!(std::abs(gt.determinant()) > 1e-12 * std::pow(scale, n))) return false;
    if (!sig) return true;
    RealTensor t(n, covariant(2), 0.0);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) t(a, b) = gt(a, b);
    return infer_signature(t) == *sig;
  }
};

/// The configured ladder, halved as a whole until its largest epsilon keeps
/// g + eps h nondegenerate with the background signature and eps h small
/// against g.
std::vector<double> safe_ladder(const Context& ctx, std::span<const Expr> h,
                                std::span<const double> point, const OracleConfig& cfg,
                                int& halvings) {
  const LadderProbe probe(ctx.bg->spec, h, point);
  std::vector<double> eps = cfg.epsilons;
  halvings = 0;
  while (!probe.accepts(eps.front(), ctx.signature)) {
    if (++halvings > 60) throw DegenerateMetric("no epsilon keeps g + eps h nondegenerate");
    for (double& e : eps) e *= 0.5;
  }
  return eps;
}

SlopeFit fit_ladder(const std::vector<double>& eps, const std::vector<double>& residuals,
                    const OracleConfig& cfg) {
  return fit_slope(eps, residuals, cfg.slope_window);
}

/// Mutations are judged on the small-epsilon end of the ladder, where an
/// O(eps) error dominates even when the first-order term is accidentally
/// small at the sample.
constexpr std::size_t kMutationWindow = 3;

SlopeFit fit_mutation(const std::vector<double>& eps, const std::vector<double>& residuals,
                      const OracleConfig& cfg) {
  std::size_t w = kMutationWindow;
  if (cfg.slope_window != 0) w = std::min(w, cfg.slope_window);
  return fit_slope(eps, residuals, w);
}

// ---------------------------------------------------------------------------
// Suites

struct SuiteDef {
  void (*plan)(const Context&, const OracleConfig&, Plan&);
  void (*point)(const Context&, std::size_t, const OracleConfig&, const Plan&, TaskOut&);
};

Rng point_rng(const OracleConfig& cfg, const std::string& suite, const Context& ctx, std::size_t i) {
  return Rng(derive_seed(cfg.seed, suite + "/" + ctx.bg->label, i));
}

int field_order(const OracleConfig& cfg) { return cfg.jet_order - 1; }

// complex ---------------------------------------------------------------------

void complex_plan(const Context&, const OracleConfig&, Plan& plan) {
  plan.check("P(K(X))", kComplexTolerance);
  plan.check("C(K(X)) - ck(X)", kIdentityTolerance);
  plan.check("P path agreement", kIdentityTolerance);
}

void complex_point(const Context& ctx, std::size_t i, const OracleConfig& cfg, const Plan& plan,
                   TaskOut& out) {
  const CurvaturePack& pack = *ctx.packs[i];
  const MetricSpec& spec = ctx.bg->spec;
  Rng rng = point_rng(cfg, "complex", ctx, i);
  for (int k = 0; k < kFieldsPerPoint; ++k) {
    const auto X = random_field(spec, rng);
    guarded(out, names_of(plan), where(i, k), [&] {
      const KillingData kd = killing_K(X, pack, spec.params, field_order(cfg));
      const Perturbation p = make_perturbation(kd, pack.m);
      const OperatorP P = operator_P(p, pack, false);
      out.record("P(K(X))", max_abs(P.value), P.scale, where(i, k));
      out.record("P path agreement", P.residual, P.scale, where(i, k));
      const CalabiParts parts = calabi_parts(p, pack);
      const CkParts ck = ck_parts(kd, pack);
      const RealTensor C = parts.second_derivatives - parts.curvature;
      out.record("C(K(X)) - ck(X)", max_abs_difference(C, ck.value), parts.scale() + ck.scale(),
                 where(i, k));
    });
  }
}

// dichotomy -------------------------------------------------------------------

bool matches_catalog(BackgroundStatus s, const EinsteinCertificate& c) {
  switch (s) {
    case BackgroundStatus::Flat: return c.is_constant_curvature && std::abs(c.kappa) <= c.tolerance;
    case BackgroundStatus::ConstantCurvature: return c.is_constant_curvature;
    case BackgroundStatus::EinsteinOnly: return c.is_einstein && !c.is_constant_curvature;
    case BackgroundStatus::Generic: return !c.is_einstein;
  }
  return false;
}

void dichotomy_plan(const Context& ctx, const OracleConfig&, Plan& plan) {
  if (!ctx.cert) {
    plan.check("ck(X) vanishes", kIdentityTolerance);
    plan.background_level.errors.emplace_back("ck(X) vanishes", "classification: " + ctx.cert_error);
    return;
  }
  const EinsteinCertificate& c = *ctx.cert;
  plan.notes.push_back("constant curvature " + std::string(c.is_constant_curvature ? "yes" : "no") +
                       ", kappa " + fmt(c.kappa) + ", cc residual " + fmt(c.cc_residual));
  if (ctx.bg->catalog_status) {
    plan.check("classification matches catalog", 0.5);
    plan.background_level.record("classification matches catalog",
                                 matches_catalog(*ctx.bg->catalog_status, c) ? 0.0 : 1.0, 0.0,
                                 "background");
  }
  if (c.is_constant_curvature)
    plan.check("ck(X) vanishes", kIdentityTolerance);
  else
    plan.check("ck(X) witness", kDichotomyWitness, Comparison::Above);
}

void dichotomy_point(const Context& ctx, std::size_t i, const OracleConfig& cfg, const Plan& plan,
                     TaskOut& out) {
  const CurvaturePack& pack = *ctx.packs[i];
  const MetricSpec& spec = ctx.bg->spec;
  const std::string name = plan.checks.back().name;
  Rng rng = point_rng(cfg, "dichotomy", ctx, i);
  for (int k = 0; k < kFieldsPerPoint; ++k) {
    const auto X = random_field(spec, rng);
    guarded(out, {name}, where(i, k), [&] {
      const KillingData kd = killing_K(X, pack, spec.params, field_order(cfg));
      const CkParts ck = ck_parts(kd, pack);
      out.record(name, max_abs(ck.value), ck.scale(), where(i, k));
    });
  }
}

// perturbation ----------------------------------------------------------------

void perturbation_plan(const Context& ctx, const OracleConfig&, Plan& plan) {
  plan.check("linearised Riemann paths", kIdentityTolerance);
  plan.slope("riemann", 1.8, 2.2, true);
  plan.slope("riemann bracket sign flipped", 0.8, 1.2, false);
  if (ctx.curved) plan.slope("riemann curvature terms sign flipped", 0.8, 1.2, false);
  plan.slope("ricci", 1.8, 2.2, true);
  plan.slope("inverse metric", 1.8, 2.2, true);
}

void perturbation_point(const Context& ctx, std::size_t i, const OracleConfig& cfg,
                        const Plan& plan, TaskOut& out) {
  const CurvaturePack& pack = *ctx.packs[i];
  const MetricSpec& spec = ctx.bg->spec;
  Rng rng = point_rng(cfg, "perturbation", ctx, i);
  const RealTensor R = values(pack.riem_low);
  const RealTensor Ric = values(pack.ricci);
  for (int k = 0; k < kPerturbationsPerPoint; ++k) {
    const auto h = random_symmetric(spec, rng);
    guarded(out, names_of(plan), where(i, k), [&] {
      const Perturbation p = make_perturbation(h, pack, spec.params, field_order(cfg));
      const LinearisedRiemann lr = linearised_riemann(p, pack);
      out.record("linearised Riemann paths", lr.path_residual, lr.scale, where(i, k));
      const CalabiParts parts = calabi_parts(p, pack);
      const RealTensor opposite = parts.second_derivatives - parts.curvature;
      const RealTensor lric = linearised_ricci(p, pack);
      const RealTensor h_up = values(p.h_up);

      int halvings = 0;
      const std::vector<double> eps = safe_ladder(ctx, h, pack.point, cfg, halvings);
      out.halvings.push_back(halvings);

      const double sR = max_abs(R) + max_abs(lr.bracket);
      const double sRic = max_abs(Ric) + max_abs(lric);
      const double sInv = max_abs(pack.m.g_inv) + max_abs(h_up);
      std::vector<double> r_riem, r_flip, r_opp, r_ric, r_inv;
      for (double e : eps) {
        const PerturbedPack pp = perturbed_metric_pack(spec, h, e, pack.point, cfg.jet_order);
        const RealTensor Rt = values(pp.pack.riem_low);
        r_riem.push_back(rel(max_abs_difference(Rt, R - (e / 2) * lr.bracket), sR));
        r_flip.push_back(rel(max_abs_difference(Rt, R + (e / 2) * lr.bracket), sR));
        r_opp.push_back(rel(max_abs_difference(Rt, R - (e / 2) * opposite), sR));
        r_ric.push_back(rel(max_abs_difference(values(pp.pack.ricci), Ric + e * lric), sRic));
        r_inv.push_back(rel(pp.inverse_residual, sInv));
      }
      out.slope("riemann", fit_ladder(eps, r_riem, cfg), where(i, k));
      out.slope("riemann bracket sign flipped", fit_mutation(eps, r_flip, cfg), where(i, k));
      if (ctx.curved)
        out.slope("riemann curvature terms sign flipped", fit_mutation(eps, r_opp, cfg), where(i, k));
      out.slope("ricci", fit_ladder(eps, r_ric, cfg), where(i, k));
      out.slope("inverse metric", fit_ladder(eps, r_inv, cfg), where(i, k));
    });
  }
}

// kernel ----------------------------------------------------------------------

void kernel_plan(const Context& ctx, const OracleConfig&, Plan& plan) {
  if (!ctx.cert || !ctx.cert->is_einstein) {
    plan.skip = true;
    plan.notes.push_back(ctx.cert ? "skipped: background is not Einstein"
                                  : "skipped: classification failed: " + ctx.cert_error);
    return;
  }
  plan.notes.push_back("lambda " + fmt(ctx.cert->lambda));
  plan.check("P(L_V g)", kGaugeRicciTolerance);
  plan.check("linearised Ricci of L_V g - lambda L_V g", kGaugeRicciTolerance);
  plan.check("P(generic h) witness", 1e-5, Comparison::Above);
  plan.slope("gauge: Ricci - lambda g", 1.8, 2.2, true);
  plan.slope("generic: Ricci - lambda g", 0.8, 1.2, false);
  if (ctx.flat) {
    plan.check("P(c g)", kGaugeRicciTolerance);
    plan.slope("constant multiple: Ricci - lambda g", 1.8, 2.2, true);
  }
}

/// Slope of max|Ric(g + eps h) - lambda (g + eps h)| over the ladder.
SlopeFit einstein_slope(const Context& ctx, std::span<const Expr> h, const CurvaturePack& pack,
                        double lambda, double scale, const OracleConfig& cfg, TaskOut& out) {
  int halvings = 0;
  const std::vector<double> eps = safe_ladder(ctx, h, pack.point, cfg, halvings);
  out.halvings.push_back(halvings);
  std::vector<double> r;
  for (double e : eps) {
    const PerturbedPack pp = perturbed_metric_pack(ctx.bg->spec, h, e, pack.point, cfg.jet_order);
    r.push_back(rel(max_abs_difference(values(pp.pack.ricci), lambda * pp.pack.m.g), scale));
  }
  return fit_ladder(eps, r, cfg);
}

void kernel_point(const Context& ctx, std::size_t i, const OracleConfig& cfg, const Plan& plan,
                  TaskOut& out) {
  const CurvaturePack& pack = *ctx.packs[i];
  const MetricSpec& spec = ctx.bg->spec;
  const double lambda = ctx.cert->lambda;
  Rng rng = point_rng(cfg, "kernel", ctx, i);
  const RealTensor Ric = values(pack.ricci);
  const RealTensor Ric_mixed = ricci_mixed(pack);
  const double base = max_abs(Ric) + std::abs(lambda) * max_abs(pack.m.g);

  const auto V = random_field(spec, rng);
  const auto gauge = lie_derivative_expressions(spec, V);
  const auto generic = random_symmetric(spec, rng);
  const double c = rng.uniform(0.5, 1.5);

  guarded(out, {"P(L_V g)", "linearised Ricci of L_V g - lambda L_V g", "gauge: Ricci - lambda g"},
          where(i, 0), [&] {
            const Perturbation p = make_perturbation(gauge, pack, spec.params, field_order(cfg));
            const OperatorP P = operator_P(p, pack, false);
            out.record("P(L_V g)", max_abs(P.value), P.scale, where(i, 0));
            const RealTensor h = values(p.h);
            const RealTensor lric = linearised_ricci(p, pack);
            RealTensor ricci_term = symmetric_contraction(Ric_mixed, h);
            for (auto& v : ricci_term.entries()) v = std::abs(v);
            const double s = max_abs(ricci_term) + 0.5 * P.scale + std::abs(lambda) * max_abs(h);
            out.record("linearised Ricci of L_V g - lambda L_V g",
                       max_abs_difference(lric, lambda * h), s, where(i, 0));
            const double scale = base + calabi_parts(p, pack).scale() + std::abs(lambda) * max_abs(h);
            out.slope("gauge: Ricci - lambda g",
                      einstein_slope(ctx, gauge, pack, lambda, scale, cfg, out),
                      where(i, 0));
          });

  guarded(out, {"P(generic h) witness", "generic: Ricci - lambda g"}, where(i, 1), [&] {
    const Perturbation p = make_perturbation(generic, pack, spec.params, field_order(cfg));
    const OperatorP P = operator_P(p, pack, false);
    out.record("P(generic h) witness", max_abs(P.value), P.scale, where(i, 1));
    const RealTensor h = values(p.h);
    const double scale = base + calabi_parts(p, pack).scale() + std::abs(lambda) * max_abs(h);
    out.slope("generic: Ricci - lambda g",
              einstein_slope(ctx, generic, pack, lambda, scale, cfg, out), where(i, 1));
  });

  if (ctx.flat) {
    const auto cg = scaled_metric_expressions(spec, c);
    guarded(out, {"P(c g)", "constant multiple: Ricci - lambda g"}, where(i, 2), [&] {
      const Perturbation p = make_perturbation(cg, pack, spec.params, field_order(cfg));
      const OperatorP P = operator_P(p, pack, false);
      out.record("P(c g)", max_abs(P.value), P.scale, where(i, 2));
      const double scale = base + c * max_abs(pack.m.g);
      out.slope("constant multiple: Ricci - lambda g",
                einstein_slope(ctx, cg, pack, lambda, scale, cfg, out), where(i, 2));
    });
  }
  (void)plan;
}

// internal --------------------------------------------------------------------

/// Entrywise |d_e R_abcd| + sum of |Gamma R| terms: the size of the pieces
/// nabla_e R_abcd is assembled from, which stays meaningful where nabla R = 0.
RealTensor nabla_riem_magnitude(const CurvaturePack& pack) {
  const int n = pack.dim();
  const RealTensor g = values(pack.gamma);
  const RealTensor r = values(pack.riem_low);
  RealTensor out(n, covariant(5), 0.0);
  for (int e = 0; e < n; ++e) {
    MultiIndex alpha{};
    alpha[e] = 1;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d) {
            double m = std::abs(pack.riem_low(a, b, c, d).derivative(alpha));
            for (int f = 0; f < n; ++f)
              m += std::abs(g(f, e, a) * r(f, b, c, d)) + std::abs(g(f, e, b) * r(a, f, c, d)) +
                   std::abs(g(f, e, c) * r(a, b, f, d)) + std::abs(g(f, e, d) * r(a, b, c, f));
            out(e, a, b, c, d) = m;
          }
  }
  return out;
}

void internal_plan(const Context& ctx, const OracleConfig&, Plan& plan) {
  plan.check("signature constant", 0.5);
  std::size_t mismatched = 0;
  for (const auto& pk : ctx.packs)
    if (pk && ctx.signature && infer_signature(pk->m.g) != *ctx.signature) ++mismatched;
  if (ctx.bg->spec.signature_hint && ctx.signature && *ctx.bg->spec.signature_hint != *ctx.signature)
    ++mismatched;
  plan.background_level.record("signature constant", static_cast<double>(mismatched), 0.0,
                               "background");

  plan.check("jet vs finite difference", kJetFdTolerance);
  plan.check("finite-difference curvature", kFdCurvatureTolerance);
  plan.check("metric compatibility", kCompatibilityTolerance);
  plan.check("commutator identity", kIdentityTolerance);
  plan.check("first Bianchi", kIdentityTolerance);
  plan.check("second Bianchi", kIdentityTolerance);
  plan.check("contracted Bianchi", kClassifyTolerance);
  if (ctx.cert && ctx.cert->is_einstein) plan.check("Ricci divergence", kClassifyTolerance);
  plan.check("Calabi Riemann symmetries", kIdentityTolerance);
  plan.check("linearised Riemann symmetries", kIdentityTolerance);
  plan.check("P path agreement", kIdentityTolerance);
  plan.check("Ricci trace identity", kIdentityTolerance);
  plan.check("Killing trace identity", kIdentityTolerance);
  plan.check("L_X g - 2 K(X)", kIdentityTolerance);
}

void internal_point(const Context& ctx, std::size_t i, const OracleConfig& cfg, const Plan& plan,
                    TaskOut& out) {
  const CurvaturePack& pack = *ctx.packs[i];
  const MetricSpec& spec = ctx.bg->spec;
  const int n = spec.dim;
  const std::string at = where(i);
  Rng rng = point_rng(cfg, "internal", ctx, i);
  const auto X = random_field(spec, rng);
  const auto V = random_field(spec, rng);
  const auto h = random_symmetric(spec, rng);

  guarded(out, {"jet vs finite difference"}, at, [&] {
    const JetLayout& layout = JetLayout::get(n, pack.m.g_jet(0, 0).order());
    double worst = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        const Jet& j = pack.m.g_jet(a, b);
        for (std::size_t r = 1; r < layout.size(); ++r) {
          const MultiIndex& alpha = layout.index(r);
          if (degree(alpha) > 3) break;
          // coefficients d^alpha f / alpha!, tolerance scaled by the larger of
          // the function value (which sets the stencil roundoff) and the coefficient
          const double fd = finite_difference(spec.component(a, b), spec.params, pack.point, alpha) /
                            multi_factorial(alpha);
          const double scale = std::max({1.0, std::abs(j.value()), std::abs(fd)});
          worst = std::max(worst, std::abs(j.coeff(alpha) - fd) / scale);
        }
      }
    out.record("jet vs finite difference", worst, 0.0, at);
  });

  guarded(out, {"finite-difference curvature"}, at, [&] {
    const FdCurvature fd = fd_curvature(spec, pack.point);
    const double d = std::max(max_abs_difference(values(pack.riem_low), fd.riem_low),
                              max_abs_difference(values(pack.ricci), fd.ricci));
    out.record("finite-difference curvature", d, std::max(1.0, curvature_scale(pack)), at);
  });

  guarded(out, {"metric compatibility"}, at, [&] {
    const RealTensor ng = values(covariant_derivative(pack.m.g_jet, pack.gamma));
    out.record("metric compatibility", max_abs(ng), max_abs(pack.m.g), at);
  });

  guarded(out, {"commutator identity"}, at, [&] {
    const JetTensor v = field_jets(V, spec.params, pack.point, contravariant(1), field_order(cfg));
    const JetTensor dv = covariant_derivative(v, pack.gamma);
    const RealTensor ddv = values(covariant_derivative(dv, pack.gamma));  // (b, a, c)
    const RealTensor rm = values(pack.riem_mixed);
    const RealTensor vv = values(v);
    double res = 0.0, scale = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) {
          double rhs = 0.0, mag = std::abs(ddv(a, b, c)) + std::abs(ddv(b, a, c));
          for (int d = 0; d < n; ++d) {
            rhs += rm(a, b, c, d) * vv(d);
            mag += std::abs(rm(a, b, c, d) * vv(d));
          }
          res = std::max(res, std::abs(ddv(a, b, c) - ddv(b, a, c) - rhs));
          scale = std::max(scale, mag);
        }
    out.record("commutator identity", res, scale, at);
  });

  guarded(out, {"first Bianchi", "second Bianchi", "contracted Bianchi", "Ricci divergence"}, at, [&] {
    const RealTensor rl = values(pack.riem_low);
    const RiemannSymmetryReport sym = check_riemann_symmetries(rl);
    out.record("first Bianchi", std::max(sym.first_bianchi, sym.pair_antisymmetry), sym.scale, at);

    const RealTensor nr = values(pack.nabla_riem);
    const RealTensor nm = nabla_riem_magnitude(pack);
    double res = 0.0, scale = 0.0;
    for (int e = 0; e < n; ++e)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < n; ++c)
            for (int d = 0; d < n; ++d) {
              const double t1 = nr(e, a, b, c, d), t2 = nr(a, b, e, c, d), t3 = nr(b, e, a, c, d);
              res = std::max(res, std::abs(t1 + t2 + t3));
              scale = std::max(scale, nm(e, a, b, c, d) + nm(a, b, e, c, d) + nm(b, e, a, c, d));
            }
    out.record("second Bianchi", res, scale, at);

    // T(e, b, d) = nabla_e R_bd
    const RealTensor& gi = pack.m.g_inv;
    RealTensor T(n, covariant(3), 0.0), Tmag(n, covariant(3), 0.0);
    for (int e = 0; e < n; ++e)
      for (int b = 0; b < n; ++b)
        for (int d = 0; d < n; ++d)
          for (int a = 0; a < n; ++a)
            for (int c = 0; c < n; ++c) {
              T(e, b, d) += gi(a, c) * nr(e, a, b, c, d);
              Tmag(e, b, d) += std::abs(gi(a, c)) * nm(e, a, b, c, d);
            }
    double cres = 0.0, cscale = 0.0, dres = 0.0, dscale = 0.0;
    for (int d = 0; d < n; ++d) {
      double div = 0.0, grad = 0.0, mag = 0.0;
      for (int e = 0; e < n; ++e)
        for (int b = 0; b < n; ++b) {
          div += gi(e, b) * T(e, b, d);
          grad += gi(e, b) * T(d, e, b);
          mag += std::abs(gi(e, b)) * (Tmag(e, b, d) + 0.5 * Tmag(d, e, b));
        }
      cres = std::max(cres, std::abs(div - 0.5 * grad));
      cscale = std::max(cscale, mag);
      dres = std::max(dres, std::abs(div));
      dscale = std::max(dscale, mag);
    }
    out.record("contracted Bianchi", cres, cscale, at);
    if (ctx.cert && ctx.cert->is_einstein) out.record("Ricci divergence", dres, dscale, at);
  });

  guarded(out,
          {"Calabi Riemann symmetries", "linearised Riemann symmetries", "P path agreement",
           "Ricci trace identity"},
          at, [&] {
            const Perturbation p = make_perturbation(h, pack, spec.params, field_order(cfg));
            const CalabiParts parts = calabi_parts(p, pack);
            const RiemannSymmetryReport cs =
                check_riemann_symmetries(parts.second_derivatives - parts.curvature);
            out.record("Calabi Riemann symmetries",
                       std::max({cs.pair_antisymmetry, cs.first_bianchi, cs.pair_interchange}),
                       parts.scale(), at);
            const LinearisedRiemann lr = linearised_riemann(p, pack);
            const RiemannSymmetryReport ls = check_riemann_symmetries(lr.bracket);
            out.record("linearised Riemann symmetries",
                       std::max({ls.pair_antisymmetry, ls.first_bianchi, ls.pair_interchange}),
                       lr.scale, at);
            const OperatorP P = operator_P(p, pack, false);
            out.record("P path agreement", P.residual, P.scale, at);
            const IdentityResidual t = ricci_trace_identity(p, pack);
            out.record("Ricci trace identity", t.residual, t.scale, at);
          });

  guarded(out, {"Killing trace identity", "L_X g - 2 K(X)"}, at, [&] {
    const KillingData kd = killing_K(X, pack, spec.params, field_order(cfg));
    const IdentityResidual t = killing_trace_identity(kd, pack);
    out.record("Killing trace identity", t.residual, t.scale, at);
    const RealTensor lie = values(lie_derivative_metric(X, spec, pack.point, field_order(cfg)));
    const RealTensor twice = 2.0 * values(kd.h);
    out.record("L_X g - 2 K(X)", max_abs_difference(lie, twice), max_abs(lie) + max_abs(twice), at);
  });
  (void)plan;
}

const SuiteDef& suite_def(const std::string& name) {
  static const SuiteDef complex_def{complex_plan, complex_point};
  static const SuiteDef dichotomy_def{dichotomy_plan, dichotomy_point};
  static const SuiteDef perturbation_def{perturbation_plan, perturbation_point};
  static const SuiteDef kernel_def{kernel_plan, kernel_point};
  static const SuiteDef internal_def{internal_plan, internal_point};
  if (name == "complex") return complex_def;
  if (name == "dichotomy") return dichotomy_def;
  if (name == "perturbation") return perturbation_def;
  if (name == "kernel") return kernel_def;
  if (name == "internal") return internal_def;
  throw UnknownSuite("unknown suite '" + name + "'");
}

// ---------------------------------------------------------------------------
// Folding

bool slope_ok(const SlopeDef& def, const SlopeFit& fit) {
  switch (fit.verdict) {
    case SlopeVerdict::Fitted: return fit.slope >= def.lo && fit.slope <= def.hi;
    case SlopeVerdict::SaturatedAtRoundoff: return def.saturation_passes;
    case SlopeVerdict::Undefined: return false;
  }
  return false;
}

VerificationReport fold(const std::string& suite, const Context& ctx, const OracleConfig& cfg,
                        const Plan& plan, const std::vector<const TaskOut*>& tasks) {
  VerificationReport rep;
  rep.suite = suite;
  rep.background = ctx.bg->label;
  rep.dim = ctx.bg->spec.dim;
  rep.seed = cfg.seed;
  rep.notes = plan.notes;

  std::vector<const TaskOut*> all{&plan.background_level};
  all.insert(all.end(), tasks.begin(), tasks.end());

  for (const CheckDef& def : plan.checks) {
    CheckResult c;
    c.name = def.name;
    c.tolerance = def.tolerance;
    c.comparison = def.comparison;
    bool any = false;
    std::string first_error;
    std::string worst_at;
    for (const TaskOut* t : all) {
      for (const Sample& s : t->samples) {
        if (s.name != def.name) continue;
        ++c.samples;
        const bool take = !any || std::isnan(s.residual) ||
                          (!std::isnan(c.max_residual) && s.residual > c.max_residual);
        if (take) {
          c.max_residual = s.residual;
          c.scale = s.scale;
          worst_at = s.where;
        }
        any = true;
      }
      for (const auto& [name, msg] : t->errors)
        if (name == def.name && first_error.empty()) first_error = msg;
    }
    if (!first_error.empty()) {
      c.status = Status::Error;
      c.detail = first_error;
    } else if (def.comparison == Comparison::Below) {
      c.status = (!any || c.max_residual < def.tolerance) ? Status::Pass : Status::Fail;
      if (any) c.detail = "worst at " + worst_at;
    } else {
      c.status = (any && c.max_residual > def.tolerance) ? Status::Pass : Status::Fail;
      if (any) c.detail = "largest at " + worst_at;
    }
    rep.checks.push_back(std::move(c));
  }

  for (const SlopeDef& def : plan.slopes) {
    SlopeResult r;
    r.name = def.name;
    r.lo = def.lo;
    r.hi = def.hi;
    r.saturation_passes = def.saturation_passes;
    r.window = cfg.slope_window == 0 ? cfg.epsilons.size() : cfg.slope_window;
    const double mid = 0.5 * (def.lo + def.hi);
    bool first = true, all_ok = true;
    std::string first_error, first_bad;
    for (const TaskOut* t : all) {
      for (const SlopeSample& s : t->slopes) {
        if (s.name != def.name) continue;
        const bool ok = slope_ok(def, s.fit);
        if (!ok && first_bad.empty())
          first_bad = s.where + ": " + to_string(s.fit.verdict) + " slope " + fmt(s.fit.slope);
        all_ok = all_ok && ok;
        switch (s.fit.verdict) {
          case SlopeVerdict::SaturatedAtRoundoff: ++r.saturated; continue;
          case SlopeVerdict::Undefined: ++r.undefined; continue;
          case SlopeVerdict::Fitted: ++r.fitted; break;
        }
        if (first) {
          r.min_slope = r.max_slope = r.fitted_slope = s.fit.slope;
          first = false;
        } else {
          r.min_slope = std::min(r.min_slope, s.fit.slope);
          r.max_slope = std::max(r.max_slope, s.fit.slope);
          if (std::abs(s.fit.slope - mid) > std::abs(r.fitted_slope - mid)) r.fitted_slope = s.fit.slope;
        }
      }
      for (const auto& [name, msg] : t->errors)
        if (name == def.name && first_error.empty()) first_error = msg;
    }
    if (!first_error.empty()) {
      r.status = Status::Error;
      r.detail = first_error;
    } else {
      r.status = all_ok ? Status::Pass : Status::Fail;
      if (!first_bad.empty()) r.detail = first_bad;
    }
    rep.slopes.push_back(std::move(r));
  }

  for (const TaskOut* t : tasks)
    for (const auto& note : t->notes) rep.notes.push_back(note);
  std::size_t ladders = 0, halved = 0;
  int most = 0;
  for (const TaskOut* t : tasks)
    for (int k : t->halvings) {
      ++ladders;
      if (k > 0) ++halved;
      most = std::max(most, k);
    }
  if (halved > 0)
    rep.notes.push_back("epsilon ladder scaled down for " + std::to_string(halved) + " of " +
                        std::to_string(ladders) + " fields, at most 2^-" + std::to_string(most));
  for (const TaskOut* t : tasks) rep.wall_time += t->seconds;
  return rep;
}

std::vector<Context> prepare(const std::vector<Background>& backgrounds, const OracleConfig& cfg,
                             Execution exec) {
  std::vector<Context> ctxs(backgrounds.size());
  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  for (std::size_t b = 0; b < backgrounds.size(); ++b) {
    Context& c = ctxs[b];
    c.bg = &backgrounds[b];
    c.points = sample_points(c.bg->spec, cfg.points_per_background,
                             derive_seed(cfg.seed, "points/" + c.bg->label, 0));
    c.packs.resize(c.points.size());
    c.pack_errors.resize(c.points.size());
    for (std::size_t i = 0; i < c.points.size(); ++i) tasks.emplace_back(b, i);
  }
  for_each_index(tasks.size(), exec, [&](std::size_t t) {
    auto [b, i] = tasks[t];
    Context& c = ctxs[b];
    try {
      c.packs[i] = curvature_pack(c.bg->spec, c.points[i], cfg.jet_order);
    } catch (const std::exception& e) {
      c.pack_errors[i] = describe(e);
    }
  });
  for (Context& c : ctxs) {
    std::vector<CurvaturePack> ok;
    for (const auto& p : c.packs)
      if (p) ok.push_back(*p);
    if (!ok.empty()) c.signature = infer_signature(ok.front().m.g);
    try {
      c.cert = classify_packs(ok, kClassifyTolerance);
      c.flat = c.cert->is_constant_curvature && std::abs(c.cert->kappa) <= c.cert->tolerance;
      c.curved = !c.flat;
    } catch (const std::exception& e) {
      c.cert_error = describe(e);
    }
  }
  return ctxs;
}

}  // namespace

SuiteRun run_suite(const std::string& suite, const OracleConfig& config,
                   const std::vector<Background>& backgrounds, Execution exec) {
  config.validate();
  std::vector<std::string> suites;
  if (suite == "all") {
    suites = suite_names();
  } else {
    suite_def(suite);
    suites = {suite};
  }

  const auto start = Clock::now();
  SuiteRun run;
  run.suite = suite;
  run.config = config;
  const std::vector<Context> ctxs = prepare(backgrounds, config, exec);

  for (const std::string& s : suites) {
    const SuiteDef& def = suite_def(s);
    std::vector<Plan> plans(ctxs.size());
    std::vector<std::pair<std::size_t, std::size_t>> tasks;
    for (std::size_t b = 0; b < ctxs.size(); ++b) {
      def.plan(ctxs[b], config, plans[b]);
      if (plans[b].skip) continue;
      for (std::size_t i = 0; i < ctxs[b].points.size(); ++i) tasks.emplace_back(b, i);
    }
    std::vector<TaskOut> outs(tasks.size());
    for_each_index(tasks.size(), exec, [&](std::size_t t) {
      auto [b, i] = tasks[t];
      const Context& c = ctxs[b];
      TaskOut& out = outs[t];
      const auto t0 = Clock::now();
      if (!c.packs[i]) {
        for (const auto& n : names_of(plans[b]))
          out.errors.emplace_back(n, where(i) + ": " + c.pack_errors[i]);
      } else {
        guarded(out, names_of(plans[b]), where(i),
                [&] { def.point(c, i, config, plans[b], out); });
      }
      out.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    });
    for (std::size_t b = 0; b < ctxs.size(); ++b) {
      std::vector<const TaskOut*> mine;
      for (std::size_t t = 0; t < tasks.size(); ++t)
        if (tasks[t].first == b) mine.push_back(&outs[t]);
      run.reports.push_back(fold(s, ctxs[b], config, plans[b], mine));
    }
  }
  run.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
  return run;
}

}  // namespace linein
