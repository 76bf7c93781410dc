// chaosbench: run experiments, print rate constants, list the model catalog,
// compare stored ensembles and sample particle systems.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "chaosbench/config.hpp"
#include "chaosbench/ensemble_io.hpp"
#include "chaosbench/errors.hpp"
#include "chaosbench/harness.hpp"
#include "chaosbench/metrics.hpp"
#include "chaosbench/parallel.hpp"
#include "chaosbench/particles.hpp"

namespace cb = chaosbench;
using nlohmann::json;

namespace {

int cmd_run(const std::string& path, int threads, const std::string& output, bool quiet) {
  json config = cb::harness::load_json(path);
  if (!output.empty()) config["output"] = output;
  const auto report = cb::harness::run(config, threads > 0 ? threads : cb::default_workers());
  if (!quiet) std::cout << cb::harness::to_csv(report);
  return report.all_pass() ? 0 : 2;
}

int cmd_validate(const std::string& path) {
  const auto problems = cb::harness::validate(cb::harness::load_json(path));
  for (const auto& p : problems) std::cout << p << "\n";
  if (problems.empty()) std::cout << "ok\n";
  return problems.empty() ? 0 : 1;
}

int cmd_constants(const std::string& path, std::optional<double> eta, bool eta_optimal,
                  std::optional<double> kappa) {
  std::vector<std::string> problems;
  const auto request = cb::harness::parse_model_request(cb::harness::load_json(path), problems);
  if (!problems.empty()) throw cb::harness::ConfigError(problems);
  const auto model = cb::model::make_model(request);
  std::cout << cb::harness::constants_json(model, eta, eta_optimal, kappa).dump(2) << "\n";
  return 0;
}

int cmd_models() {
  for (const auto& e : cb::model::catalog()) {
    std::string params;
    for (const auto& p : e.params) params += (params.empty() ? "" : ", ") + p;
    fmt::print("{:<6} {:<14} {:<40} params: [{}]  {}\n", e.role, e.name, e.formula, params,
               e.declared_constants);
  }
  return 0;
}

int cmd_dist(const std::string& metric, bool half, int bins, const std::string& a_path,
             const std::string& b_path) {
  const auto a = cb::particles::read_binary(a_path);
  const auto b = cb::particles::read_binary(b_path);
  if (a.dim != b.dim) throw std::invalid_argument("ensembles have different dimensions");
  const cb::metrics::SampleSet sa{a.positions, a.dim}, sb{b.positions, b.dim};
  double value = 0.0;
  if (metric == "w1") {
    if (a.dim != 1) throw std::invalid_argument("--metric w1 needs d = 1; use w1_assign");
    value = cb::metrics::w1_1d(a.positions, b.positions);
  } else if (metric == "w1_assign") {
    value = cb::metrics::w1_assignment(sa, sb);
  } else {
    cb::metrics::Binning binning;
    if (bins > 0) {
      binning.bins = bins;
      binning.rule = cb::metrics::Binning::Rule::fixed;
    }
    value = cb::metrics::tv_histogram(sa, sb, binning);
    if (half) value = cb::metrics::half_tv(value);
  }
  fmt::print("{:.17g}\n", value);
  return 0;
}

int cmd_sample(const std::string& path, std::size_t n, double T, double dt, std::uint64_t seed,
               std::uint64_t replica, const std::string& out) {
  const json config = cb::harness::load_json(path);
  std::vector<std::string> problems;
  const auto request = cb::harness::parse_model_request(config, problems);
  if (!problems.empty()) throw cb::harness::ConfigError(problems);
  const auto model = cb::model::make_model(request);
  cb::particles::InitialLaw law;
  if (config.contains("mu0")) {
    auto probe = config;
    probe["schema"] = 1;
    probe["scenario"] = "constants_report";
    probe["seed"] = seed;
    auto parsed = cb::harness::parse_config(probe);
    if (!parsed.config) throw cb::harness::ConfigError(parsed.problems);
    law = parsed.config->mu0;
  }
  const auto ens = cb::particles::simulate_particle_system(model, law, n, T, dt, seed, replica);
  if (out.size() > 4 && out.substr(out.size() - 4) == ".csv") {
    cb::particles::write_csv(ens, out);
  } else {
    cb::particles::write_binary(ens, out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Propagation-of-chaos experiment harness"};
  app.require_subcommand(1);

  std::string config_path, output;
  int threads = 0;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
  run->add_option("config", config_path, "Experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("--threads", threads, "Worker threads (default: CHAOSBENCH_THREADS or all cores)");
  run->add_option("--output", output, "Output prefix, overriding the config");
  run->add_flag("--quiet", quiet, "Do not echo the CSV report");

  auto* val = app.add_subcommand("validate", "List every problem in a config");
  val->add_option("config", config_path, "Experiment config")->required()->check(CLI::ExistingFile);

  std::optional<double> eta, kappa;
  bool eta_optimal = false;
  auto* cons = app.add_subcommand("constants", "Print the rate constants of a model as JSON");
  cons->add_option("--model", config_path, "Experiment config or bare model block")
      ->required()
      ->check(CLI::ExistingFile);
  cons->add_option("--eta", eta, "Stable case: eta in (0,1)");
  cons->add_flag("--eta-optimal", eta_optimal, "Stable case: maximize lambda over eta");
  cons->add_option("--kappa", kappa, "Stable case: coupling truncation (default l0)");

  app.add_subcommand("models", "List the model catalog");

  std::string metric = "w1", a_path, b_path;
  bool half = false;
  int bins = 0;
  auto* dist = app.add_subcommand("dist", "Distance between two stored ensembles");
  dist->add_option("--metric", metric, "w1 | w1_assign | tv")
      ->check(CLI::IsMember({"w1", "w1_assign", "tv"}));
  dist->add_flag("--half-tv", half, "Report total variation with diameter 1");
  dist->add_option("--bins", bins, "Fixed bins per axis for tv (default Freedman-Diaconis)");
  dist->add_option("a", a_path)->required()->check(CLI::ExistingFile);
  dist->add_option("b", b_path)->required()->check(CLI::ExistingFile);

  std::size_t n = 1000;
  double T = 1.0, dt = 1e-3;
  std::uint64_t seed = 0, replica = 0;
  std::string out;
  auto* sample = app.add_subcommand("sample", "Simulate an N-particle system and store it");
  sample->add_option("--model", config_path, "Experiment config or bare model block")
      ->required()
      ->check(CLI::ExistingFile);
  sample->add_option("-n,--particles", n, "Number of particles");
  sample->add_option("-T,--horizon", T, "Final time");
  sample->add_option("--dt", dt, "Time step");
  sample->add_option("--seed", seed, "Master seed");
  sample->add_option("--replica", replica, "Replica index");
  sample->add_option("-o,--out", out, "Output file (.bin or .csv)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, threads, output, quiet);
    if (*val) return cmd_validate(config_path);
    if (*cons) return cmd_constants(config_path, eta, eta_optimal, kappa);
    if (app.got_subcommand("models")) return cmd_models();
    if (*dist) return cmd_dist(metric, half, bins, a_path, b_path);
    if (*sample) return cmd_sample(config_path, n, T, dt, seed, replica, out);
  } catch (const cb::harness::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const cb::NumericalFault& e) {
    std::cerr << "numerical fault: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
