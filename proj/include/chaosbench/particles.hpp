#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chaosbench/couplings.hpp"
#include "chaosbench/model.hpp"
#include "chaosbench/noise.hpp"
#include "chaosbench/rng.hpp"

namespace chaosbench::particles {

struct EnsembleMeta {
  std::string model_id;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t steps = 0;
};

/// N particles in R^dim, row-major.
struct Ensemble {
  std::size_t n = 0;
  int dim = 1;
  std::vector<double> positions;
  double time = 0.0;
  EnsembleMeta meta;

  std::span<double> row(std::size_t i) { return std::span<double>(positions).subspan(i * dim, dim); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(positions).subspan(i * dim, dim);
  }
};

Ensemble make_ensemble(std::size_t n, int dim);

enum class InitialKind { point, gaussian, pareto };

/// Initial laws. point: delta at center (every coordinate). gaussian:
/// center + scale N(0, I). pareto: center + scale (U^{-1/tail} - 1) times a
/// uniform direction, so |X - center| has moments of order < tail only.
struct InitialLaw {
  InitialKind kind = InitialKind::point;
  double center = 0.0;
  double scale = 1.0;
  double tail = 2.0;
};

void sample_initial(const InitialLaw& law, Stream& rng, std::span<double> out);

/// Row i drawn from the stream (seed, role, replica, i).
Ensemble sample_ensemble(const InitialLaw& law, std::size_t n, int dim, std::uint64_t seed,
                         StreamRole role, std::uint64_t replica);

/// Per-particle interaction drift (1/N) sum_m b1(x_i, x_m), N x dim. The mean
/// is taken in a fixed order, so the result does not depend on scheduling.
/// Mean-separable interactions use the O(N) form unless force_direct is set.
void mean_field_drifts(const model::ModelSpec& model, const Ensemble& ens, std::span<double> out,
                       bool force_direct = false);

/// One step of the N-particle system; particle i draws from streams[i].
/// Throws NumericalFault naming the step on a non-finite state.
void step_particle_system(Ensemble& ens, const model::ModelSpec& model, double dt,
                          std::span<Stream> streams);

/// Same step with the noise supplied: dW (N x dim) multiplies sqrt(beta) in
/// the Brownian case and is the full increment in the stable case; dB
/// (N x noise_dim) drives sigma and may be empty when sigma is zero.
void step_particle_system(Ensemble& ens, const model::ModelSpec& model, double dt,
                          std::span<const double> dW, std::span<const double> dB);

/// Runs the N-particle system from law to time T. Initial rows use the
/// initial_particles role and noise the particle_noise role, both under
/// (seed, replica, i).
Ensemble simulate_particle_system(const model::ModelSpec& model, const InitialLaw& law,
                                  std::size_t n, double T, double dt, std::uint64_t seed,
                                  std::uint64_t replica);

/// Piecewise-constant-in-time empirical flow: snapshot k holds M samples of
/// the state at time k * snapshot_dt.
struct MeasureFlow {
  int dim = 1;
  std::size_t M = 0;
  double snapshot_dt = 0.01;
  std::vector<double> grid;
  std::vector<std::vector<double>> snapshots;
  std::vector<std::vector<double>> means;

  /// Snapshot in force at time t (the last grid point <= t).
  std::size_t index_at(double t) const;
  /// Integral of b1(x, .) against the snapshot in force at t.
  void interaction_drift(const model::ModelSpec& model, std::span<const double> x, double t,
                         std::span<double> out) const;
};

struct LimitFlowOptions {
  std::size_t M = 1000;
  double T = 1.0;
  double dt = 1e-3;
  int picard_iters = 3;
  double snapshot_dt = 0.01;
  double tolerance = 1e-3;
  InitialLaw mu0;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  int workers = 1;
};

struct LimitFlowResult {
  MeasureFlow flow;
  /// changes[k] = max over the grid of the W1 distance between the flows of
  /// iterations k and k + 1 (coordinate-averaged when dim > 1).
  std::vector<double> changes;
  bool converged = false;
};

/// Frozen-flow Picard iteration for the nonlinear limit. Iteration 0 freezes
/// the interaction at the initial sample; iteration k drives M independent
/// decoupled SDEs with the flow of iteration k - 1. Every iteration reuses the
/// same initial sample and noise, so the changes measure the map itself.
/// picard_iters counts all iterations including iteration 0.
LimitFlowResult solve_limit_flow(const model::ModelSpec& model, const LimitFlowOptions& options);

enum class CouplingKind { reflection, refined_basic, synchronous };
enum class Pairing { product, optimal, identical };

struct CoupledRunOptions {
  std::size_t N = 256;
  double T = 1.0;
  double dt = 1e-3;
  CouplingKind coupling = CouplingKind::reflection;
  couplings::CutoffSpec cutoff;
  couplings::KappaSpec kappa;
  std::optional<noise::StableSpec> stable;
  Pairing pairing = Pairing::product;
  InitialLaw mu0;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  /// Times at which the trace is recorded; rounded to the step grid. t = 0 is
  /// always recorded.
  std::vector<double> record_times;
};

struct CoupledTrace {
  std::vector<double> times;
  std::vector<double> sum_distance;  // sum_i |x_limit_i - x_particle_i|
  std::vector<double> merged_fraction;
};

/// Couples the N-particle system with N independent copies of the limit
/// dynamics (driven by `flow`), pair i sharing the stream (seed, pair_noise,
/// replica, i).
CoupledTrace simulate_coupled_systems(const model::ModelSpec& model, const MeasureFlow& flow,
                                      const CoupledRunOptions& options);

/// First k rows, k x dim.
std::vector<double> sample_marginal(const Ensemble& ens, std::size_t k);

}  // namespace chaosbench::particles
