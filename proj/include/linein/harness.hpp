#pragma once

// Suite runner. A suite is a fixed list of named checks (a residual compared
// with a tolerance) and slope fits, evaluated over seeded sample points of
// each background and folded into one VerificationReport per background.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "linein/metric.hpp"
#include "linein/oracle.hpp"
#include "linein/parallel.hpp"

namespace linein {

struct Background {
  /// e.g. "sphere:3" or the DSL name
  std::string label;
  MetricSpec spec;
  /// catalog status for builtins
  std::optional<BackgroundStatus> catalog_status;
};

/// Builtin name (with dim, or dims 2..4 when dim is absent), "all", or a
/// path to a .metric file. Missing builtin parameters take catalog defaults.
std::vector<Background> resolve_backgrounds(const std::string& which, std::optional<int> dim,
                                            const ParamTable& params);
Background builtin(const std::string& name, int dim, const ParamTable& params = {});
Background load_metric_file(const std::string& path);

const std::vector<std::string>& suite_names();

enum class Status { Pass, Fail, Error };
const char* to_string(Status s);

enum class Comparison { Below, Above };

struct CheckResult {
  std::string name;
  /// largest relative residual over all samples
  double max_residual = 0.0;
  /// scale the worst residual was divided by
  double scale = 0.0;
  double tolerance = 0.0;
  Comparison comparison = Comparison::Below;
  Status status = Status::Pass;
  std::size_t samples = 0;
  std::string detail;
};

struct SlopeResult {
  std::string name;
  /// the fitted slope farthest from the middle of [lo, hi]
  double fitted_slope = 0.0;
  double min_slope = 0.0;
  double max_slope = 0.0;
  std::size_t window = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t fitted = 0;
  std::size_t saturated = 0;
  std::size_t undefined = 0;
  bool saturation_passes = true;
  Status status = Status::Pass;
  std::string detail;
};

struct VerificationReport {
  std::string suite;
  std::string background;
  int dim = 0;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;
  std::vector<SlopeResult> slopes;
  std::vector<std::string> notes;
  double wall_time = 0.0;

  Status status() const;
  bool pass() const { return status() == Status::Pass; }
  const CheckResult* check(const std::string& name) const;
  const SlopeResult* slope(const std::string& name) const;
};

struct SuiteRun {
  std::string suite;
  OracleConfig config;
  std::vector<VerificationReport> reports;
  double wall_time = 0.0;

  Status status() const;
  bool pass() const { return status() == Status::Pass; }
};

// Per-sample field counts.
inline constexpr int kFieldsPerPoint = 5;
inline constexpr int kPerturbationsPerPoint = 3;

// Tolerances shared by the suites and the tests.
inline constexpr double kComplexTolerance = 1e-8;
inline constexpr double kIdentityTolerance = 1e-10;
inline constexpr double kDichotomyWitness = 1e-4;
inline constexpr double kClassifyTolerance = 1e-9;
inline constexpr double kGaugeRicciTolerance = 1e-9;
inline constexpr double kJetFdTolerance = 1e-5;
inline constexpr double kFdCurvatureTolerance = 1e-6;
inline constexpr double kCompatibilityTolerance = 1e-12;

/// Throws UnknownSuite. "all" runs every suite in order.
SuiteRun run_suite(const std::string& suite, const OracleConfig& config,
                   const std::vector<Background>& backgrounds,
                   Execution exec = Execution::Parallel);

}  // namespace linein
