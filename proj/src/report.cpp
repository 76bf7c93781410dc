#include "chaosbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace chaosbench::harness {
namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

nlohmann::json json_num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

bool ExperimentReport::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.pass; });
}

std::string to_csv(const ExperimentReport& report) {
  std::string out = fmt::format("# chaosbench {} config_hash={} seed={}\n", kVersion,
                                report.config_hash, report.seed);
  out += "scenario,parameter,value,estimate,mc_stderr,theory_bound,pass\n";
  for (const auto& r : report.rows) {
    out += fmt::format("{},{},{},{},{},{},{}\n", r.scenario, r.parameter, num(r.value),
                       num(r.estimate), num(r.mc_stderr),
                       r.theory_bound ? num(*r.theory_bound) : std::string(),
                       r.pass ? "true" : "false");
  }
  return out;
}

nlohmann::json to_json(const ExperimentReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"scenario", r.scenario},
                    {"parameter", r.parameter},
                    {"value", json_num(r.value)},
                    {"estimate", json_num(r.estimate)},
                    {"mc_stderr", json_num(r.mc_stderr)},
                    {"theory_bound", r.theory_bound ? json_num(*r.theory_bound) : nullptr},
                    {"pass", r.pass}});
  }
  return {{"provenance",
           {{"version", kVersion},
            {"config_hash", report.config_hash},
            {"seed", report.seed},
            {"workers", report.workers},
            {"wall_seconds", report.wall_seconds}}},
          {"scenario", report.scenario},
          {"all_pass", report.all_pass()},
          {"rows", rows},
          {"details", report.details}};
}

std::string to_svg(const PlotSpec& plot) {
  constexpr double W = 640, H = 420, L = 70, Rm = 170, T = 40, B = 50;
  auto tx = [&](double x) { return plot.logx ? std::log10(x) : x; };
  auto ty = [&](double y) { return plot.logy ? std::log10(y) : y; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!plot.logx || x > 0) && (!plot.logy || y > 0);
  };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : plot.series) {
    for (std::size_t i = 0; i < std::min(s.xs.size(), s.ys.size()); ++i) {
      if (!usable(s.xs[i], s.ys[i])) continue;
      x0 = std::min(x0, tx(s.xs[i]));
      x1 = std::max(x1, tx(s.xs[i]));
      y0 = std::min(y0, ty(s.ys[i]));
      y1 = std::max(y1, ty(s.ys[i]));
    }
  }
  if (!(x1 >= x0)) x0 = 0, x1 = 1;
  if (!(y1 >= y0)) y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * (W - L - Rm); };
  auto py = [&](double y) { return H - B - (ty(y) - y0) / (y1 - y0) * (H - T - B); };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{}\" y=\"22\" font-size=\"14\">{}</text>\n",
      W, H, L, escape_xml(plot.title));
  svg += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", L, T,
      W - L - Rm, H - T - B);

  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4.0;
    const double fy = y0 + (y1 - y0) * k / 4.0;
    const double lx = plot.logx ? std::pow(10.0, fx) : fx;
    const double ly = plot.logy ? std::pow(10.0, fy) : fy;
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{:.3g}</text>\n",
                       px(lx), H - B + 16, lx);
    svg += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n", L - 6,
                       py(ly) + 4, ly);
  }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                     L + (W - L - Rm) / 2, H - 12, escape_xml(plot.xlabel));
  svg += fmt::format(
      "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
      T + (H - T - B) / 2, T + (H - T - B) / 2, escape_xml(plot.ylabel));

  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const char* color = colors[k % 6];
    std::string pts;
    for (std::size_t i = 0; i < std::min(s.xs.size(), s.ys.size()); ++i) {
      if (!usable(s.xs[i], s.ys[i])) continue;
      pts += fmt::format("{:.2f},{:.2f} ", px(s.xs[i]), py(s.ys[i]));
    }
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\"{} points=\"{}\"/>\n",
                       color, s.dashed ? " stroke-dasharray=\"6 4\"" : "", pts);
    const double ly = T + 16 + 18 * static_cast<double>(k);
    svg += fmt::format(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"{}/>\n",
        W - Rm + 10, ly - 4, W - Rm + 30, ly - 4, color,
        s.dashed ? " stroke-dasharray=\"6 4\"" : "");
    svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", W - Rm + 36, ly,
                       escape_xml(s.name));
  }
  svg += "</svg>\n";
  return svg;
}

void write_outputs(const ExperimentReport& report, const std::string& prefix, bool plots) {
  const std::filesystem::path base(prefix);
  if (base.has_parent_path()) std::filesystem::create_directories(base.parent_path());
  write_file(prefix + ".csv", to_csv(report));
  write_file(prefix + ".json", to_json(report).dump(2) + "\n");
  if (!plots) return;
  for (std::size_t k = 0; k < report.plots.size(); ++k) {
    write_file(fmt::format("{}_{}.svg", prefix, k), to_svg(report.plots[k]));
  }
}

}  // namespace chaosbench::harness
