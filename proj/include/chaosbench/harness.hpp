#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "chaosbench/config.hpp"
#include "chaosbench/model.hpp"
#include "chaosbench/report.hpp"

namespace chaosbench::harness {

/// Thrown by run() on an invalid configuration; carries every diagnostic.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Validates, then runs the scenario. Every emitted number depends only on
/// the config (including its seed), never on `workers`.
ExperimentReport run(const nlohmann::json& config, int workers);

/// Runs an already parsed config. The caller is responsible for validation.
ExperimentReport run(const ExperimentConfig& config, int workers);

/// Mean and variance of one coordinate of dX = -kappa X dt + sqrt(beta) dW +
/// s dB at time T from X_0 = x0, by classical RK4 on the moment equations
/// m' = -kappa m, v' = -2 kappa v + beta + s^2.
struct OuMoments {
  double mean = 0.0;
  double variance = 0.0;
};
OuMoments ou_moments(double kappa, double beta, double s, double x0, double T,
                     std::size_t rk_steps = 10000);

/// Semi-log least squares of log y on t: returns the decay exponent -slope
/// and its standard error (zero with two points).
struct DecayFit {
  double exponent = 0.0;
  double stderr_exponent = 0.0;
  std::size_t points = 0;
};
DecayFit decay_fit(const std::vector<double>& ts, const std::vector<double>& ys);

/// Rate constants of a model as JSON, the output of `chaosbench constants`.
nlohmann::json constants_json(const model::ModelSpec& model, std::optional<double> eta,
                              bool eta_optimal, std::optional<double> kappa);

}  // namespace chaosbench::harness
