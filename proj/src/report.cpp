#include "linein/report.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace linein {

ReportFormat parse_format(const std::string& name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  if (name == "text") return ReportFormat::Text;
  throw std::invalid_argument("unknown format '" + name + "' (json, csv, text)");
}

std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  return out + "\"";
}

std::string json_number(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

const char* comparison_name(Comparison c) { return c == Comparison::Below ? "below" : "above"; }

/// Minimal pretty printer: callers emit keys in a fixed order.
class JsonWriter {
 public:
  explicit JsonWriter(std::ostream& os) : os_(os) {}

  void open(char bracket) {
    os_ << bracket;
    ++depth_;
    first_ = true;
  }
  void close(char bracket) {
    --depth_;
    if (!first_) newline();
    os_ << bracket;
    first_ = false;
  }
  void key(const std::string& k) {
    item();
    os_ << json_string(k) << ": ";
  }
  void item() {
    if (!first_) os_ << ",";
    newline();
    first_ = true;
  }
  void raw(const std::string& v) {
    os_ << v;
    first_ = false;
  }
  void field(const std::string& k, const std::string& v) {
    key(k);
    raw(json_string(v));
  }
  void field(const std::string& k, double v) {
    key(k);
    raw(json_number(v));
  }
  void field_int(const std::string& k, long long v) {
    key(k);
    raw(std::to_string(v));
  }
  void field_uint(const std::string& k, unsigned long long v) {
    key(k);
    raw(std::to_string(v));
  }
  void field_bool(const std::string& k, bool v) {
    key(k);
    raw(v ? "true" : "false");
  }

 private:
  void newline() {
    os_ << "\n" << std::string(2 * depth_, ' ');
  }

  std::ostream& os_;
  int depth_ = 0;
  bool first_ = true;
};

void json_run(const SuiteRun& run, std::ostream& os, const EmitOptions& opt) {
  JsonWriter w(os);
  w.open('{');
  w.field("suite", run.suite);
  w.field_uint("seed", run.config.seed);
  w.field_bool("pass", run.pass());
  w.field("status", to_string(run.status()));
  w.key("config");
  w.open('{');
  w.key("epsilons");
  w.open('[');
  for (double e : run.config.epsilons) {
    w.item();
    w.raw(json_number(e));
  }
  w.close(']');
  w.field_uint("slope_window", run.config.slope_window);
  w.field_uint("points_per_background", run.config.points_per_background);
  w.field_int("jet_order", run.config.jet_order);
  w.close('}');
  w.key("reports");
  w.open('[');
  for (const VerificationReport& r : run.reports) {
    w.item();
    w.open('{');
    w.field("suite", r.suite);
    w.field("background", r.background);
    w.field_int("dim", r.dim);
    w.field_uint("seed", r.seed);
    w.field_bool("pass", r.pass());
    w.field("status", to_string(r.status()));
    w.key("checks");
    w.open('[');
    for (const CheckResult& c : r.checks) {
      w.item();
      w.open('{');
      w.field("name", c.name);
      w.field("max_residual", c.max_residual);
      w.field("scale", c.scale);
      w.field("tolerance", c.tolerance);
      w.field("comparison", comparison_name(c.comparison));
      w.field_uint("samples", c.samples);
      w.field_bool("pass", c.status == Status::Pass);
      w.field("status", to_string(c.status));
      w.field("detail", c.detail);
      w.close('}');
    }
    w.close(']');
    w.key("slopes");
    w.open('[');
    for (const SlopeResult& s : r.slopes) {
      w.item();
      w.open('{');
      w.field("name", s.name);
      w.field("fitted_slope", s.fitted_slope);
      w.field("min_slope", s.min_slope);
      w.field("max_slope", s.max_slope);
      w.field_uint("window", s.window);
      w.key("range");
      w.open('[');
      w.item();
      w.raw(json_number(s.lo));
      w.item();
      w.raw(json_number(s.hi));
      w.close(']');
      w.field_uint("fitted", s.fitted);
      w.field_uint("saturated", s.saturated);
      w.field_uint("undefined", s.undefined);
      w.field_bool("saturation_passes", s.saturation_passes);
      w.field_bool("pass", s.status == Status::Pass);
      w.field("status", to_string(s.status));
      w.field("detail", s.detail);
      w.close('}');
    }
    w.close(']');
    w.key("notes");
    w.open('[');
    for (const auto& n : r.notes) {
      w.item();
      w.raw(json_string(n));
    }
    w.close(']');
    if (opt.timing) w.field("wall_time", r.wall_time);
    w.close('}');
  }
  w.close(']');
  if (opt.timing) w.field("wall_time", run.wall_time);
  w.close('}');
  os << "\n";
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void csv_run(const SuiteRun& run, std::ostream& os, const EmitOptions& opt) {
  os << "suite,background,dim,seed,kind,name,value,scale,tolerance,range_lo,range_hi,samples,status,"
        "detail";
  if (opt.timing) os << ",wall_time";
  os << "\n";
  for (const VerificationReport& r : run.reports) {
    const std::string prefix = csv_cell(r.suite) + "," + csv_cell(r.background) + "," +
                               std::to_string(r.dim) + "," + std::to_string(r.seed) + ",";
    const std::string tail = opt.timing ? "," + json_number(r.wall_time) : "";
    for (const CheckResult& c : r.checks)
      os << prefix << "check," << csv_cell(c.name) << "," << json_number(c.max_residual) << ","
         << json_number(c.scale) << "," << json_number(c.tolerance) << ",,," << c.samples << ","
         << to_string(c.status) << "," << csv_cell(c.detail) << tail << "\n";
    for (const SlopeResult& s : r.slopes)
      os << prefix << "slope," << csv_cell(s.name) << "," << json_number(s.fitted_slope) << ",,,"
         << json_number(s.lo) << "," << json_number(s.hi) << "," << (s.fitted + s.saturated + s.undefined)
         << "," << to_string(s.status) << "," << csv_cell(s.detail) << tail << "\n";
  }
}

void text_run(const SuiteRun& run, std::ostream& os, const EmitOptions& opt) {
  os << "suite " << run.suite << "  seed " << run.config.seed << "  status " << to_string(run.status())
     << "\n";
  for (const VerificationReport& r : run.reports) {
    os << "\n[" << r.suite << "] " << r.background << " (dim " << r.dim << ")  "
       << to_string(r.status());
    if (opt.timing) os << "  " << std::fixed << std::setprecision(2) << r.wall_time << "s";
    os << "\n";
    os << std::defaultfloat;
    for (const CheckResult& c : r.checks) {
      char line[256];
      std::snprintf(line, sizeof line, "  %-5s %-44s %11.3e %s %9.1e  (%zu samples)\n",
                    to_string(c.status), c.name.c_str(), c.max_residual,
                    c.comparison == Comparison::Below ? "<" : ">", c.tolerance, c.samples);
      os << line;
      if (c.status != Status::Pass && !c.detail.empty()) os << "        " << c.detail << "\n";
    }
    for (const SlopeResult& s : r.slopes) {
      char line[256];
      std::snprintf(line, sizeof line,
                    "  %-5s %-44s slope %6.3f in [%.1f, %.1f]  (min %.3f, max %.3f, %zu saturated)\n",
                    to_string(s.status), s.name.c_str(), s.fitted_slope, s.lo, s.hi, s.min_slope,
                    s.max_slope, s.saturated);
      os << line;
      if (s.status != Status::Pass && !s.detail.empty()) os << "        " << s.detail << "\n";
    }
    for (const auto& n : r.notes) os << "  note: " << n << "\n";
  }
  if (opt.timing) os << "\nwall time " << std::fixed << std::setprecision(2) << run.wall_time << "s\n";
}

}  // namespace

void emit_report(const SuiteRun& run, ReportFormat format, std::ostream& os,
                 const EmitOptions& options) {
  switch (format) {
    case ReportFormat::Json: json_run(run, os, options); break;
    case ReportFormat::Csv: csv_run(run, os, options); break;
    case ReportFormat::Text: text_run(run, os, options); break;
  }
}

std::string emit_report(const SuiteRun& run, ReportFormat format, const EmitOptions& options) {
  std::ostringstream os;
  emit_report(run, format, os, options);
  return os.str();
}

int exit_code(const SuiteRun& run) {
  switch (run.status()) {
    case Status::Pass: return 0;
    case Status::Fail: return 1;
    case Status::Error: return 2;
  }
  return 2;
}

// ---------------------------------------------------------------------------

namespace {

void json_tensor(JsonWriter& w, const std::string& key, const RealTensor& t) {
  w.key(key);
  w.open('[');
  for (double v : t.entries()) {
    w.item();
    w.raw(json_number(v));
  }
  w.close(']');
}

void text_tensor(std::ostream& os, const std::string& name, const RealTensor& t,
                 const std::vector<std::string>& coords) {
  std::vector<int> idx(t.rank());
  bool any = false;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (std::abs(t[k]) < 1e-14) continue;
    t.unflatten(k, idx);
    os << "  " << name << "[";
    for (int s = 0; s < t.rank(); ++s) os << (s ? "," : "") << coords[idx[s]];
    char buf[40];
    std::snprintf(buf, sizeof buf, "] = %.17g\n", t[k]);
    os << buf;
    any = true;
  }
  if (!any) os << "  " << name << " = 0\n";
}

}  // namespace

void emit_pack(const CurvaturePack& pack, const MetricSpec& spec, ReportFormat format,
               std::ostream& os) {
  const RealTensor g = pack.m.g, gi = pack.m.g_inv;
  const RealTensor gamma = values(pack.gamma), rm = values(pack.riem_mixed),
                   rl = values(pack.riem_low), ric = values(pack.ricci),
                   nr = values(pack.nabla_riem);
  if (format == ReportFormat::Json) {
    JsonWriter w(os);
    w.open('{');
    w.field("background", spec.name);
    w.field_int("dim", spec.dim);
    w.key("coords");
    w.open('[');
    for (const auto& c : spec.coord_names) {
      w.item();
      w.raw(json_string(c));
    }
    w.close(']');
    w.key("point");
    w.open('[');
    for (double x : pack.point) {
      w.item();
      w.raw(json_number(x));
    }
    w.close(']');
    w.field("det", pack.m.det);
    json_tensor(w, "g", g);
    json_tensor(w, "g_inv", gi);
    json_tensor(w, "christoffel", gamma);
    json_tensor(w, "riemann_mixed", rm);
    json_tensor(w, "riemann", rl);
    json_tensor(w, "ricci", ric);
    w.field("scalar", pack.scalar.value());
    json_tensor(w, "nabla_riemann", nr);
    w.close('}');
    os << "\n";
  } else if (format == ReportFormat::Csv) {
    os << "quantity,indices,value\n";
    auto rows = [&](const std::string& name, const RealTensor& t) {
      std::vector<int> idx(t.rank());
      for (std::size_t k = 0; k < t.size(); ++k) {
        t.unflatten(k, idx);
        os << name << ",";
        for (int s = 0; s < t.rank(); ++s) os << (s ? " " : "") << idx[s];
        os << "," << json_number(t[k]) << "\n";
      }
    };
    rows("g", g);
    rows("g_inv", gi);
    rows("christoffel", gamma);
    rows("riemann_mixed", rm);
    rows("riemann", rl);
    rows("ricci", ric);
    os << "scalar,," << json_number(pack.scalar.value()) << "\n";
    rows("nabla_riemann", nr);
  } else {
    os << spec.name << " at (";
    for (int i = 0; i < spec.dim; ++i)
      os << (i ? ", " : "") << spec.coord_names[i] << "=" << json_number(pack.point[i]);
    os << ")\n";
    os << "det g = " << json_number(pack.m.det) << "\n";
    text_tensor(os, "g", g, spec.coord_names);
    text_tensor(os, "Gamma", gamma, spec.coord_names);
    text_tensor(os, "R", rl, spec.coord_names);
    text_tensor(os, "Ric", ric, spec.coord_names);
    os << "  scalar = " << json_number(pack.scalar.value()) << "\n";
  }
}

void emit_certificate(const EinsteinCertificate& c, const std::string& background,
                      ReportFormat format, std::ostream& os) {
  if (format == ReportFormat::Json) {
    JsonWriter w(os);
    w.open('{');
    w.field("background", background);
    w.field_bool("is_einstein", c.is_einstein);
    w.field("lambda", c.lambda);
    w.field("lambda_spread", c.lambda_spread);
    w.field("einstein_residual", c.einstein_residual);
    w.field_bool("is_constant_curvature", c.is_constant_curvature);
    w.field("kappa", c.kappa);
    w.field("cc_residual", c.cc_residual);
    w.field("tolerance", c.tolerance);
    w.field_uint("points", c.points);
    w.close('}');
    os << "\n";
  } else if (format == ReportFormat::Csv) {
    os << "background,is_einstein,lambda,lambda_spread,einstein_residual,is_constant_curvature,kappa,"
          "cc_residual,tolerance,points\n";
    os << csv_cell(background) << "," << (c.is_einstein ? "true" : "false") << ","
       << json_number(c.lambda) << "," << json_number(c.lambda_spread) << ","
       << json_number(c.einstein_residual) << "," << (c.is_constant_curvature ? "true" : "false")
       << "," << json_number(c.kappa) << "," << json_number(c.cc_residual) << ","
       << json_number(c.tolerance) << "," << c.points << "\n";
  } else {
    os << background << "\n";
    os << "  Einstein:           " << (c.is_einstein ? "yes" : "no") << "  (residual "
       << json_number(c.einstein_residual) << ", lambda " << json_number(c.lambda) << ", spread "
       << json_number(c.lambda_spread) << ")\n";
    os << "  constant curvature: " << (c.is_constant_curvature ? "yes" : "no") << "  (residual "
       << json_number(c.cc_residual) << ", kappa " << json_number(c.kappa) << ")\n";
    os << "  points " << c.points << ", tolerance " << json_number(c.tolerance) << "\n";
  }
}

}  // namespace linein
