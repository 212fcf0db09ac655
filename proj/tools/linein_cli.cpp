// linein: verification harness for the linearised Einstein operators.
//
//   linein verify --suite all --background all --seed 42 --output report.json
//   linein curvature --background schwarzschild --point 0,4,1.2,0.5
//   linein classify --background sphere --dim 3
//   linein list-backgrounds

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "linein/errors.hpp"
#include "linein/fields.hpp"
#include "linein/geometry.hpp"
#include "linein/harness.hpp"
#include "linein/report.hpp"

using namespace linein;

namespace {

constexpr int kUsageExit = 3;

std::vector<double> parse_reals(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (item.empty() || used != item.size())
      throw CLI::ValidationError(what, "'" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError(what, "empty list");
  return out;
}

ParamTable parse_params(const std::vector<std::string>& items) {
  ParamTable out;
  for (const auto& kv : items) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw CLI::ValidationError("--param", "expected name=value, got '" + kv + "'");
    out[kv.substr(0, eq)] = parse_reals(kv.substr(eq + 1), "--param").at(0);
  }
  return out;
}

struct Common {
  std::string background = "all";
  std::optional<int> dim;
  std::vector<std::string> params;
  std::string format;
};

void add_common(CLI::App* cmd, Common& c, const std::string& default_format) {
  c.format = default_format;
  cmd->add_option("--background,-b", c.background, "builtin name, 'all', or a .metric file");
  cmd->add_option("--dim,-d", c.dim, "chart dimension for builtin backgrounds");
  cmd->add_option("--param", c.params, "background parameter, name=value (repeatable)");
  cmd->add_option("--format,-f", c.format, "json, csv or text")
      ->check(CLI::IsMember({"json", "csv", "text"}));
}

int write_output(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return 0;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write '" << path << "'\n";
    return kUsageExit;
  }
  out << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical verification of the Killing, Calabi and deformation operators"};
  app.require_subcommand(1);

  // verify
  auto* verify = app.add_subcommand("verify", "run a verification suite");
  Common vc;
  add_common(verify, vc, "json");
  std::string suite = "all";
  OracleConfig cfg;
  std::string epsilons;
  std::string output;
  bool serial = false;
  bool timing = false;
  verify->add_option("--suite,-s", suite, "complex, dichotomy, perturbation, kernel, internal or all");
  verify->add_option("--seed", cfg.seed, "random seed");
  verify->add_option("--points", cfg.points_per_background, "sample points per background")
      ->check(CLI::PositiveNumber);
  verify->add_option("--jet-order", cfg.jet_order, "metric jet order (>= 4)");
  verify->add_option("--epsilons", epsilons, "comma-separated decreasing epsilon ladder");
  verify->add_option("--slope-window", cfg.slope_window, "ladder points used in slope fits (0: all)");
  verify->add_option("--output,-o", output, "output file (default stdout)");
  verify->add_flag("--serial", serial, "run on one thread");
  verify->add_flag("--timing", timing, "include wall times in the report");

  // curvature
  auto* curv = app.add_subcommand("curvature", "dump the curvature data at a point");
  Common cc;
  add_common(curv, cc, "text");
  std::string point_text;
  int curv_order = kMetricJetOrder;
  curv->add_option("--point,-p", point_text, "comma-separated coordinates (default: domain centre)");
  curv->add_option("--jet-order", curv_order, "metric jet order (>= 3)");

  // classify
  auto* classify = app.add_subcommand("classify", "Einstein / constant-curvature certificate");
  Common kc;
  add_common(classify, kc, "text");
  std::size_t class_points = 20;
  std::uint64_t class_seed = 42;
  classify->add_option("--points", class_points, "sample points")->check(CLI::Range(2, 100000));
  classify->add_option("--seed", class_seed, "random seed");

  auto* list = app.add_subcommand("list-backgrounds", "list the builtin backgrounds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageExit;
  }

  try {
    if (list->parsed()) {
      for (const auto& b : builtin_catalog()) {
        std::cout << b.name << "  dim " << b.min_dim;
        if (b.max_dim != b.min_dim) std::cout << ".." << b.max_dim;
        for (const auto& [k, v] : b.default_params) std::cout << "  " << k << "=" << v;
        std::cout << "  " << b.description << "\n";
      }
      return 0;
    }

    if (verify->parsed()) {
      if (!epsilons.empty()) cfg.epsilons = parse_reals(epsilons, "--epsilons");
      cfg.validate();
      const ReportFormat format = parse_format(vc.format);
      const auto backgrounds = resolve_backgrounds(vc.background, vc.dim, parse_params(vc.params));
      if (suite != "all") {
        const auto& names = suite_names();
        if (std::find(names.begin(), names.end(), suite) == names.end())
          throw UnknownSuite("unknown suite '" + suite + "'");
      }
      const SuiteRun run =
          run_suite(suite, cfg, backgrounds, serial ? Execution::Serial : Execution::Parallel);
      EmitOptions opt;
      opt.timing = timing;
      const int rc = write_output(emit_report(run, format, opt), output);
      if (rc != 0) return rc;
      return exit_code(run);
    }

    if (curv->parsed()) {
      std::optional<std::vector<double>> point;
      if (!point_text.empty()) point = parse_reals(point_text, "--point");
      std::optional<int> dim = cc.dim;
      if (!dim && point && cc.background != "all") dim = static_cast<int>(point->size());
      const auto backgrounds = resolve_backgrounds(cc.background, dim, parse_params(cc.params));
      if (backgrounds.size() != 1)
        throw std::invalid_argument("curvature needs a single background: pass --dim or --point");
      const MetricSpec& spec = backgrounds.front().spec;
      std::vector<double> p(spec.dim);
      if (point) {
        if (static_cast<int>(point->size()) != spec.dim)
          throw BadDimension("--point has " + std::to_string(point->size()) + " coordinates, background has dim " +
                             std::to_string(spec.dim));
        p = *point;
      } else {
        for (int i = 0; i < spec.dim; ++i) p[i] = spec.safe_domain[i].center();
      }
      const CurvaturePack pack = curvature_pack(spec, p, curv_order);
      emit_pack(pack, spec, parse_format(cc.format), std::cout);
      return 0;
    }

    if (classify->parsed()) {
      const auto backgrounds = resolve_backgrounds(kc.background, kc.dim, parse_params(kc.params));
      for (const auto& bg : backgrounds) {
        const auto pts = sample_points(bg.spec, class_points, derive_seed(class_seed, "points/" + bg.label, 0));
        const EinsteinCertificate cert = classify_background(bg.spec, pts, kClassifyTolerance);
        emit_certificate(cert, bg.label, parse_format(kc.format), std::cout);
      }
      return 0;
    }
  } catch (const UnknownBackground& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageExit;
  } catch (const UnknownSuite& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageExit;
  } catch (const BadDimension& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageExit;
  } catch (const MissingParam& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageExit;
  } catch (const SyntaxError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageExit;
  } catch (const SemanticError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageExit;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageExit;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageExit;
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return kUsageExit;
}
