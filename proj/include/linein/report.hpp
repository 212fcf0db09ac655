#pragma once

// Report emission. JSON is the canonical format: fixed key order, reals as
// %.17g, non-finite reals as null. Wall times are written only on request so
// that two runs with the same seed produce identical bytes.

#include <ostream>
#include <string>

#include "linein/geometry.hpp"
#include "linein/harness.hpp"

namespace linein {

enum class ReportFormat { Json, Csv, Text };

ReportFormat parse_format(const std::string& name);

struct EmitOptions {
  bool timing = false;
};

void emit_report(const SuiteRun& run, ReportFormat format, std::ostream& os,
                 const EmitOptions& options = {});
std::string emit_report(const SuiteRun& run, ReportFormat format, const EmitOptions& options = {});

/// 0 all pass, 1 any FAIL, 2 any ERROR.
int exit_code(const SuiteRun& run);

void emit_pack(const CurvaturePack& pack, const MetricSpec& spec, ReportFormat format,
               std::ostream& os);
void emit_certificate(const EinsteinCertificate& cert, const std::string& background,
                      ReportFormat format, std::ostream& os);

/// JSON string literal with escapes.
std::string json_string(const std::string& s);
/// %.17g, or null when not finite.
std::string json_number(double v);

}  // namespace linein
