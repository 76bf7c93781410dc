#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chaosbench/metrics.hpp"
#include "chaosbench/model.hpp"
#include "chaosbench/particles.hpp"

namespace chaosbench::harness {

enum class Scenario {
  constants_report,
  lln_rate,
  brownian_contraction,
  stable_contraction,
  tv_n_scaling,
  ou_exact,
  coupling_bias_study,
};

const char* scenario_name(Scenario s);
std::optional<Scenario> parse_scenario(const std::string& name);

/// A parsed experiment configuration. Every field has a documented default
/// except scenario and seed.
struct ExperimentConfig {
  int schema = 1;
  Scenario scenario = Scenario::constants_report;
  std::uint64_t seed = 0;
  std::string output;  // path prefix for .csv/.json/.svg; empty = no files

  model::ModelRequest model;

  std::vector<std::size_t> N_grid;
  std::vector<double> t_grid;
  double T = 1.0;
  double dt = 1e-3;
  std::size_t replicas = 8;
  std::optional<std::size_t> M;  // limit-flow size; 16 N when unset
  particles::InitialLaw mu0;

  double epsilon = 0.01;
  std::optional<double> merge_radius;
  std::optional<double> kappa;
  std::optional<double> eta;  // unset: 0.5, unless eta_optimal
  bool eta_optimal = false;
  std::optional<double> trunc;  // kappa / 10 when unset
  int picard_iters = 3;
  double snapshot_dt = 0.01;
  particles::Pairing pairing = particles::Pairing::product;

  int bins = 32;
  std::optional<std::pair<double, double>> range;
  bool half_tv = false;
  bool plot = true;

  double tail_index = 1.7;
  double lln_eps = 0.5;
  std::size_t reps = 200;
  double tv_tolerance = 0.05;
  std::vector<double> epsilon_grid;
  std::vector<double> trunc_grid;

  nlohmann::json source;  // the input, for hashing and provenance
};

struct ParseResult {
  std::optional<ExperimentConfig> config;
  std::vector<std::string> problems;
};

/// Structural parse. Collects every problem instead of stopping at the
/// first one.
ParseResult parse_config(const nlohmann::json& j);

/// Structural problems plus semantic checks (admissibility of the model for
/// the scenario's rate constants, noise type versus scenario). Empty when the
/// config can be run.
std::vector<std::string> validate(const nlohmann::json& j);

/// Reads a JSON file; throws std::runtime_error on I/O or syntax errors.
nlohmann::json load_json(const std::string& path);

/// FNV-1a 64 of the canonical (sorted-key, compact) dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

/// Model-only parse used by `chaosbench constants --model`: accepts either a
/// full experiment config or a bare model block.
model::ModelRequest parse_model_request(const nlohmann::json& j, std::vector<std::string>& problems);

}  // namespace chaosbench::harness
