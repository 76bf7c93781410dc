#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "chaosbench/model.hpp"
#include "chaosbench/noise.hpp"
#include "chaosbench/rng.hpp"

namespace chaosbench::couplings {

struct CutoffSpec {
  double epsilon = 0.01;
  double merge_radius = 0.0025;
};

/// epsilon > 0; merge_radius defaults to epsilon / 4 and must lie in
/// [0, epsilon / 2).
CutoffSpec make_cutoff(double epsilon, std::optional<double> merge_radius = std::nullopt);

struct KappaSpec {
  double kappa = 1.0;
};

double pi_R(double r, const CutoffSpec& cutoff);
double pi_S(double r, const CutoffSpec& cutoff);

/// (x)_kappa: x when |x| <= kappa, kappa x / |x| otherwise.
void truncate_kappa(std::span<const double> x, const KappaSpec& kappa, std::span<double> out);
std::vector<double> truncate_kappa(std::span<const double> x, const KappaSpec& kappa);

/// Limit copy and interacting particle driven by one coupled noise.
///
/// Merge rule: once |x_limit - x_particle| < merge_radius the pair is
/// pending; if the following step keeps it below merge_radius it becomes
/// merged, with merge_time the first time it went below. merged is absorbing
/// and from then on both members receive identical noise (each keeps its
/// own drift).
struct CoupledPair {
  std::vector<double> x_limit;
  std::vector<double> x_particle;
  bool merged = false;
  std::optional<double> merge_time;
  bool pending = false;
  double pending_since = 0.0;

  double distance() const;
};

CoupledPair make_pair(std::vector<double> x_limit, std::vector<double> x_particle);

/// Time and index of the step being taken, for merge times and fault reports.
struct StepContext {
  double t = 0.0;
  double dt = 1e-3;
  std::uint64_t step = 0;
};

/// Counts of the thinning branches taken by refined_basic_step together with
/// the summed branch probabilities, for goodness-of-fit checks.
struct BranchTally {
  std::uint64_t jumps = 0;
  std::uint64_t branch_plus = 0;   // particle jump z + (x)_kappa
  std::uint64_t branch_minus = 0;  // particle jump z - (x)_kappa
  double expected_plus = 0.0;
  double expected_minus = 0.0;
};

/// The mean-field terms are the interaction drifts already averaged by the
/// caller: the integral of b1(x_limit, .) against mu_t for the limit copy and
/// the empirical average for the particle. All steps update `pair` in place.

/// Brownian asymptotic reflection coupling, Euler-Maruyama with the
/// reflection direction frozen over the step.
void reflection_step(CoupledPair& pair, const model::ModelSpec& model,
                     std::span<const double> mean_field_limit,
                     std::span<const double> mean_field_particle, const StepContext& ctx,
                     const CutoffSpec& cutoff, Stream& rng);

/// Stable asymptotic refined basic coupling: drift, then the shared large
/// jumps in time order with the thinning of the particle's jump, then the
/// shared small-jump compensation.
void refined_basic_step(CoupledPair& pair, const model::ModelSpec& model,
                        std::span<const double> mean_field_limit,
                        std::span<const double> mean_field_particle, const StepContext& ctx,
                        const CutoffSpec& cutoff, const KappaSpec& kappa,
                        const noise::StableSpec& stable, Stream& rng,
                        BranchTally* tally = nullptr);

/// Identical noise for both members. In the stable case both receive the
/// same exact stable increment.
void synchronous_step(CoupledPair& pair, const model::ModelSpec& model,
                      std::span<const double> mean_field_limit,
                      std::span<const double> mean_field_particle, const StepContext& ctx,
                      Stream& rng);

/// Applies the merge rule to the post-step state. Called by every step.
void update_merge(CoupledPair& pair, const CutoffSpec& cutoff, double t_after);

}  // namespace chaosbench::couplings
