#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace chaosbench::harness {

inline constexpr const char* kVersion = "0.1.0";

struct ReportRow {
  std::string scenario;
  std::string parameter;
  double value = 0.0;
  double estimate = 0.0;
  double mc_stderr = 0.0;
  std::optional<double> theory_bound;
  bool pass = true;
};

struct PlotSeries {
  std::string name;
  std::vector<double> xs;
  std::vector<double> ys;
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool logy = false;
  std::vector<PlotSeries> series;
};

struct ExperimentReport {
  std::string scenario;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<ReportRow> rows;
  nlohmann::json details = nlohmann::json::object();
  std::vector<PlotSpec> plots;
  double wall_seconds = 0.0;
  int workers = 1;

  bool all_pass() const;
};

/// Deterministic CSV: a comment line with version and config hash, a header,
/// then one line per row. Numbers use 17 significant digits; a null theory
/// bound is an empty field. No timing information.
std::string to_csv(const ExperimentReport& report);

/// Rows, details and a provenance block (version, config hash, seed, workers,
/// wall time).
nlohmann::json to_json(const ExperimentReport& report);

/// Self-contained SVG line plot.
std::string to_svg(const PlotSpec& plot);

/// Writes <prefix>.csv, <prefix>.json and, when plots are wanted,
/// <prefix>_<k>.svg. Creates the parent directory if needed.
void write_outputs(const ExperimentReport& report, const std::string& prefix, bool plots);

}  // namespace chaosbench::harness
