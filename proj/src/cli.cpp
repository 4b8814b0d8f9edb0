#include "safercross/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "safercross/error.hpp"
#include "safercross/metrics.hpp"
#include "safercross/presets.hpp"
#include "safercross/report_io.hpp"
#include "safercross/scenario.hpp"

namespace safercross::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void WriteFile(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::RuntimeError, "cannot write " + path.string());
  f << contents;
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

json ParseValue(const std::string& text) {
  try {
    std::size_t used = 0;
    const long long i = std::stoll(text, &used);
    if (used == text.size()) return i;
  } catch (const std::exception&) {
  }
  try {
    std::size_t used = 0;
    const double d = std::stod(text, &used);
    if (used == text.size()) return d;
  } catch (const std::exception&) {
  }
  if (text == "true") return true;
  if (text == "false") return false;
  return text;
}

std::vector<std::string> ResolveMetrics(const std::string& selection) {
  const auto names = SplitList(selection.empty() ? "all" : selection);
  std::vector<std::string> out;
  for (const auto& n : names) {
    if (n == "all") {
      for (const auto& m : engine::metric_names()) out.push_back(m);
      continue;
    }
    const auto& valid = engine::metric_names();
    if (std::find(valid.begin(), valid.end(), n) == valid.end()) {
      std::string list;
      for (const auto& v : valid) list += (list.empty() ? "" : ", ") + v;
      throw UsageError("unknown metric '" + n + "'; valid names: " + list + ", all");
    }
    out.push_back(n);
  }
  return out;
}

std::string MetricsCsv(const engine::Metrics& m, const std::vector<std::string>& names, const fs::path* dir) {
  std::string printed;
  for (const auto& name : names) {
    for (const auto& [file, body] : engine::metric_tables(m, name)) {
      if (dir) {
        WriteFile(*dir / file, body);
      } else {
        printed += "# " + file + "\n" + body;
      }
    }
  }
  return printed;
}

engine::Scenario Prepare(const json& raw, std::optional<std::uint64_t> seed, const fs::path& base) {
  json doc = engine::expand_scenario_json(raw);
  if (seed) doc["seed"] = *seed;
  return engine::parse_scenario(doc, base);
}

std::string Label(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

struct RunOptions {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string sweep;
  std::string metrics;
  int reps = 1;
};

int CmdRun(const RunOptions& o, std::ostream& out) {
  const auto selection = ResolveMetrics(o.metrics);
  const fs::path scenario_path(o.scenario);
  const fs::path base = scenario_path.has_parent_path() ? scenario_path.parent_path() : fs::path(".");
  json raw;
  {
    std::ifstream in(scenario_path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open scenario file " + o.scenario);
    try {
      raw = json::parse(in);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ParseError, o.scenario + ": " + e.what());
    }
  }
  const fs::path out_dir(o.out);

  if (o.sweep.empty()) {
    const auto s = Prepare(raw, o.seed, base);
    const auto report = engine::run(s);
    const auto metrics = engine::compute_metrics(report);
    WriteFile(out_dir / "report.json", engine::dump_report(report));
    WriteFile(out_dir / "metrics.json", engine::metrics_to_json(metrics).dump(1) + "\n");
    MetricsCsv(metrics, selection, &out_dir);
    out << "wrote " << (out_dir / "report.json").string() << "\n";
    return kOk;
  }

  const auto sweep = parse_sweep(o.sweep);
  if (o.reps < 1) throw UsageError("--reps must be >= 1");
  std::string csv =
      sweep.param + ",runs,alerts,mean_t_warning,mean_t_warning_gt,mean_abs_error,mean_probability,"
                    "raw_mean_error_m,calibrated_mean_error_m,energy_savings,viewing_accuracy\n";
  for (const auto& value : sweep.values) {
    const json doc = apply_parameter(raw, sweep.param, value);
    std::vector<double> tw, gt, err, prob, raw_err, cal_err, savings, viewing;
    for (int rep = 0; rep < o.reps; ++rep) {
      json expanded = engine::expand_scenario_json(doc);
      const std::uint64_t base_seed = o.seed ? *o.seed : expanded.value("seed", std::uint64_t{0});
      const auto s = Prepare(expanded, base_seed + static_cast<std::uint64_t>(rep), base);
      const auto report = engine::run(s);
      const auto m = engine::compute_metrics(report);
      const fs::path run_dir = out_dir / (sweep.param + "=" + Label(value)) / ("rep" + std::to_string(rep));
      WriteFile(run_dir / "report.json", engine::dump_report(report));
      WriteFile(run_dir / "metrics.json", engine::metrics_to_json(m).dump(1) + "\n");
      MetricsCsv(m, selection, &run_dir);
      for (const auto& w : m.warnings) {
        if (w.t_warning) tw.push_back(*w.t_warning);
        if (w.t_warning_gt) gt.push_back(*w.t_warning_gt);
        if (w.t_warning && w.t_warning_gt) err.push_back(std::fabs(*w.t_warning - *w.t_warning_gt));
        if (w.probability) prob.push_back(*w.probability);
      }
      if (m.raw_mean_error) raw_err.push_back(*m.raw_mean_error);
      if (m.calibrated_mean_error) cal_err.push_back(*m.calibrated_mean_error);
      if (m.energy_savings) savings.push_back(*m.energy_savings);
      if (m.viewing_accuracy) viewing.push_back(*m.viewing_accuracy);
    }
    auto mean = [](const std::vector<double>& v) -> std::string {
      if (v.empty()) return "";
      std::ostringstream s;
      s.precision(10);
      s << std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      return s.str();
    };
    csv += Label(value) + "," + std::to_string(o.reps) + "," + std::to_string(tw.size()) + "," + mean(tw) + "," +
           mean(gt) + "," + mean(err) + "," + mean(prob) + "," + mean(raw_err) + "," + mean(cal_err) + "," +
           mean(savings) + "," + mean(viewing) + "\n";
  }
  WriteFile(out_dir / "sweep.csv", csv);
  out << "wrote " << (out_dir / "sweep.csv").string() << "\n";
  return kOk;
}

int CmdMetrics(const std::string& report_path, const std::string& selection, const std::string& out_dir,
               std::ostream& out) {
  const auto names = ResolveMetrics(selection);
  const auto report = engine::load_report(report_path);
  const auto m = engine::compute_metrics(report);
  if (out_dir.empty()) {
    out << MetricsCsv(m, names, nullptr);
  } else {
    const fs::path dir(out_dir);
    MetricsCsv(m, names, &dir);
    out << "wrote metrics to " << dir.string() << "\n";
  }
  return kOk;
}

int CmdPreset(const std::string& kind, const std::vector<std::string>& params, const std::string& out_file,
              std::ostream& out) {
  json p = json::object();
  for (const auto& kv : params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--param expects key=value, got '" + kv + "'");
    p[kv.substr(0, eq)] = ParseValue(kv.substr(eq + 1));
  }
  const json doc = engine::make_preset(kind, p);
  const std::string text = doc.dump(1) + "\n";
  if (out_file.empty()) {
    out << text;
  } else {
    WriteFile(out_file, text);
    out << "wrote " << out_file << "\n";
  }
  return kOk;
}

}  // namespace

SweepSpec parse_sweep(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::InvalidArgument, "sweep must look like param=v1,v2,...");
  }
  SweepSpec s;
  s.param = text.substr(0, eq);
  for (const auto& v : SplitList(text.substr(eq + 1))) s.values.push_back(ParseValue(v));
  if (s.values.empty()) throw Error(ErrorCode::InvalidArgument, "sweep '" + s.param + "' has no values");
  return s;
}

json apply_parameter(const json& doc, const std::string& param, const json& value) {
  if (doc.is_object() && doc.contains("preset") && param.find('.') == std::string::npos) {
    json out = doc;
    if (!out.contains("params")) out["params"] = json::object();
    out["params"][param] = value;
    return out;
  }
  json out = engine::expand_scenario_json(doc);
  json* node = &out;
  const auto parts = [&] {
    std::vector<std::string> v;
    std::stringstream ss(param);
    std::string item;
    while (std::getline(ss, item, '.')) v.push_back(item);
    return v;
  }();
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!node->is_object()) throw Error(ErrorCode::InvalidArgument, "sweep path '" + param + "' does not name a field");
    node = &(*node)[parts[i]];
  }
  *node = value;
  return out;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pedestrian-safety simulator: scenarios, sweeps and metrics"};
  app.require_subcommand(1);

  RunOptions run;
  std::uint64_t seed = 0;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario and write the report and metrics");
  run_cmd->add_option("--scenario", run.scenario, "Scenario JSON file")->required();
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Seed override");
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  run_cmd->add_option("--sweep", run.sweep, "Parameter sweep, param=v1,v2,...");
  run_cmd->add_option("--reps", run.reps, "Seeded repetitions per sweep value (seed, seed+1, ...)");
  run_cmd->add_option("--metrics", run.metrics, "Metric tables to write, name[,name] or all");

  std::string report_path, selection, metrics_out;
  auto* metrics_cmd = app.add_subcommand("metrics", "Print or write metric tables from a saved report");
  metrics_cmd->add_option("--report", report_path, "Report JSON written by run")->required();
  metrics_cmd->add_option("--metrics", selection, "Metric tables, name[,name] or all");
  metrics_cmd->add_option("--out", metrics_out, "Directory for CSV files (stdout when omitted)");

  std::string kind, preset_out;
  std::vector<std::string> params;
  auto* preset_cmd = app.add_subcommand("preset", "Write a built-in scenario");
  preset_cmd->add_option("kind", kind, "crossing, energy, mapmatch or overhear")->required();
  preset_cmd->add_option("--param", params, "Preset parameter key=value (repeatable)");
  preset_cmd->add_option("--out", preset_out, "Output file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) {
      if (seed_opt->count() > 0) run.seed = seed;
      return CmdRun(run, out);
    }
    if (*metrics_cmd) return CmdMetrics(report_path, selection, metrics_out, out);
    return CmdPreset(kind, params, preset_out, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::ParseError:
      case ErrorCode::ValidationError: return kInput;
      case ErrorCode::InvalidArgument: return kUsage;
      default: return kRuntime;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

}  // namespace safercross::cli
