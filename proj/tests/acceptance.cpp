// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "linein/harness.hpp"
#include "linein/report.hpp"

using namespace linein;

namespace {

struct Gate {
  int failures = 0;

  void report(int n, const char* what, bool ok, const std::string& detail) {
    std::printf("criterion %2d %s  %s  (%s)\n", n, ok ? "PASS" : "FAIL", what, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<const VerificationReport*> of_suite(const SuiteRun& run, const std::string& suite) {
  std::vector<const VerificationReport*> out;
  for (const auto& r : run.reports)
    if (r.suite == suite) out.push_back(&r);
  return out;
}

/// Every report of the suite has the named check and it passes; tracks the worst residual.
bool check_everywhere(const SuiteRun& run, const std::string& suite, const std::string& name, double& worst,
                      std::size_t min_samples = 0) {
  bool ok = true;
  for (const auto* r : of_suite(run, suite)) {
    const CheckResult* c = r->check(name);
    if (!c || c->status != Status::Pass || c->samples < min_samples) {
      std::printf("    %s / %s: %s\n", r->background.c_str(), name.c_str(),
                  c ? (std::string(to_string(c->status)) + " " + fmt("%.3e", c->max_residual)).c_str() : "missing");
      ok = false;
      continue;
    }
    worst = std::max(worst, c->max_residual);
  }
  return ok;
}

bool slope_everywhere(const SuiteRun& run, const std::string& suite, const std::string& name, double& lo, double& hi,
                      bool required = true) {
  bool ok = true;
  for (const auto* r : of_suite(run, suite)) {
    const SlopeResult* s = r->slope(name);
    if (!s) {
      if (required) {
        std::printf("    %s / %s: missing\n", r->background.c_str(), name.c_str());
        ok = false;
      }
      continue;
    }
    if (s->status != Status::Pass) {
      std::printf("    %s / %s: %s slopes [%.3f, %.3f]\n", r->background.c_str(), name.c_str(), to_string(s->status),
                  s->min_slope, s->max_slope);
      ok = false;
      continue;
    }
    if (s->fitted > 0) {
      lo = std::min(lo, s->min_slope);
      hi = std::max(hi, s->max_slope);
    }
  }
  return ok;
}

std::string range(double lo, double hi) { return fmt("slopes %.3f", lo) + fmt("..%.3f", hi); }

}  // namespace

int main() {
  Gate gate;
  const OracleConfig config;  // seed 42, 20 points, default ladder
  const auto backgrounds = resolve_backgrounds("all", std::nullopt, {});
  const std::vector<Background> controls{load_metric_file(std::string(LINEIN_DATA_DIR) + "/warped_plane.metric"),
                                         load_metric_file(std::string(LINEIN_DATA_DIR) + "/tilted_3d.metric")};

  const auto t0 = std::chrono::steady_clock::now();
  const SuiteRun run = run_suite("all", config, backgrounds);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const SuiteRun ctrl = run_suite("complex", config, controls);

  const std::size_t per_bg = config.points_per_background * kFieldsPerPoint;

  {
    double worst = 0.0;
    const bool ok = check_everywhere(run, "complex", "P(K(X))", worst, per_bg);
    gate.report(1, "P(K(X)) vanishes on every Einstein builtin", ok,
                fmt("max relative residual %.2e", worst) + fmt(" over %.0f backgrounds", of_suite(run, "complex").size()));
  }
  {
    bool ok = true;
    double weakest = 1e300;
    for (const auto& r : ctrl.reports) {
      const CheckResult* c = r.check("P(K(X))");
      const bool hit = c && c->max_residual > 1e-5;
      ok = ok && hit;
      if (c) weakest = std::min(weakest, c->max_residual);
    }
    gate.report(2, "P(K(X)) is nonzero on the non-Einstein controls", ok, fmt("smallest max residual %.2e", weakest));
  }
  {
    double worst = 0.0;
    bool ok = check_everywhere(run, "complex", "C(K(X)) - ck(X)", worst, per_bg);
    ok = check_everywhere(ctrl, "complex", "C(K(X)) - ck(X)", worst, per_bg) && ok;
    gate.report(3, "C(K(X)) equals the closed form on every background and control", ok,
                fmt("max relative residual %.2e", worst));
  }
  {
    bool ok = true;
    double worst_zero = 0.0, witness = 0.0;
    for (const auto* r : of_suite(run, "dichotomy")) {
      if (const CheckResult* z = r->check("ck(X) vanishes")) {
        ok = ok && z->status == Status::Pass;
        worst_zero = std::max(worst_zero, z->max_residual);
      }
      if (const CheckResult* w = r->check("ck(X) witness")) {
        ok = ok && w->status == Status::Pass;
        if (r->background == "schwarzschild:4") witness = w->max_residual;
      }
      const CheckResult* cat = r->check("classification matches catalog");
      ok = ok && cat && cat->status == Status::Pass;
    }
    ok = ok && witness > 1e-4;
    gate.report(4, "closed form vanishes exactly on constant curvature", ok,
                fmt("max residual %.2e there", worst_zero) + fmt(", schwarzschild witness %.2e", witness));
  }
  {
    double lo = 1e9, hi = -1e9, mlo = 1e9, mhi = -1e9;
    bool ok = slope_everywhere(run, "perturbation", "riemann", lo, hi);
    ok = slope_everywhere(run, "perturbation", "riemann bracket sign flipped", mlo, mhi) && ok;
    ok = slope_everywhere(run, "perturbation", "riemann curvature terms sign flipped", mlo, mhi, false) && ok;
    double worst = 0.0;
    ok = check_everywhere(run, "perturbation", "linearised Riemann paths", worst) && ok;
    gate.report(5, "first-order Riemann converges at second order, mutations at first", ok,
                range(lo, hi) + ", mutant " + range(mlo, mhi));
  }
  {
    double rlo = 1e9, rhi = -1e9, ilo = 1e9, ihi = -1e9;
    bool ok = slope_everywhere(run, "perturbation", "ricci", rlo, rhi);
    ok = slope_everywhere(run, "perturbation", "inverse metric", ilo, ihi) && ok;
    gate.report(6, "first-order Ricci and inverse metric converge at second order", ok,
                "ricci " + range(rlo, rhi) + ", inverse " + range(ilo, ihi));
  }
  {
    double glo = 1e9, ghi = -1e9, nlo = 1e9, nhi = -1e9, clo = 1e9, chi = -1e9;
    bool ok = slope_everywhere(run, "kernel", "gauge: Ricci - lambda g", glo, ghi);
    ok = slope_everywhere(run, "kernel", "generic: Ricci - lambda g", nlo, nhi) && ok;
    ok = slope_everywhere(run, "kernel", "constant multiple: Ricci - lambda g", clo, chi, false) && ok;
    double worst = 0.0;
    ok = check_everywhere(run, "kernel", "P(L_V g)", worst) && ok;
    ok = check_everywhere(run, "kernel", "P(generic h) witness", worst) && ok;
    gate.report(7, "P(h) = 0 exactly when the Einstein condition holds to first order", ok,
                "gauge " + range(glo, ghi) + ", generic " + range(nlo, nhi));
  }
  {
    double worst = 0.0;
    bool ok = check_everywhere(run, "complex", "P path agreement", worst);
    ok = check_everywhere(run, "internal", "P path agreement", worst) && ok;
    ok = check_everywhere(ctrl, "complex", "P path agreement", worst) && ok;
    gate.report(8, "both assemblies of P agree", ok, fmt("max relative residual %.2e", worst));
  }
  {
    bool ok = true;
    std::size_t checks = 0;
    for (const auto* r : of_suite(run, "internal")) {
      ok = ok && r->pass();
      checks += r->checks.size();
      if (!r->pass())
        for (const auto& c : r->checks)
          if (c.status != Status::Pass)
            std::printf("    %s / %s: %s %.3e\n", r->background.c_str(), c.name.c_str(), to_string(c.status),
                        c.max_residual);
    }
    for (const char* name : {"commutator identity", "first Bianchi", "second Bianchi", "Calabi Riemann symmetries",
                             "Ricci trace identity", "Killing trace identity", "L_X g - 2 K(X)",
                             "jet vs finite difference"}) {
      double worst = 0.0;
      ok = check_everywhere(run, "internal", name, worst) && ok;
    }
    gate.report(9, "internal identities hold", ok, fmt("%.0f checks", static_cast<double>(checks)));
  }
  {
    const SuiteRun again = run_suite("all", config, backgrounds);
    const bool same = emit_report(run, ReportFormat::Json) == emit_report(again, ReportFormat::Json);
    const bool fast = seconds < 300.0;
    gate.report(10, "seed 42 runs are byte-identical and finish in time", same && fast,
                std::string(same ? "identical" : "different") + fmt(", %.1f s", seconds));
  }

  const bool all_pass = run.pass();
  std::printf("full run status: %s\n", to_string(run.status()));
  return gate.failures == 0 && all_pass ? 0 : 1;
}
