#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "chaosbench/rng.hpp"

namespace chaosbench::metrics {

/// Non-owning view of n points in R^dim stored row-major, uniform weights.
struct SampleSet {
  std::span<const double> points;
  int dim = 1;

  std::size_t size() const { return dim > 0 ? points.size() / dim : 0; }
  std::span<const double> row(std::size_t i) const { return points.subspan(i * dim, dim); }
};

/// W1 between two 1-d empirical laws: the integral of |F_a - F_b|. For equal
/// sizes this is the mean absolute difference of the sorted samples; unequal
/// sizes are handled exactly by the same CDF integral. Throws on empty input.
double w1_1d(std::span<const double> a, std::span<const double> b);

/// Exact W1 under the Euclidean ground metric via optimal assignment.
/// Equal sizes, n <= 4096.
double w1_assignment(const SampleSet& a, const SampleSet& b);

/// Sum over the k blocks of length block_dim of the Euclidean block distances.
double rho1_distance(std::span<const double> x, std::span<const double> y, int block_dim);

/// W1 on (R^block_dim)^k under the rho1 ground metric; each point of a and b
/// has a.dim = k * block_dim coordinates.
double w1_product(const SampleSet& a, const SampleSet& b, int block_dim);

struct Binning {
  enum class Rule { freedman_diaconis, fixed };
  Rule rule = Rule::freedman_diaconis;
  int bins = 32;  // per axis, fixed rule
  /// Fixed range per axis; the pooled range when empty.
  std::vector<double> lo;
  std::vector<double> hi;
  /// Adds one cell below lo and one above hi per axis (fixed rule).
  bool overflow = true;
};

/// sum over cells |p_a - p_b| on a common grid, in [0, 2]. dim <= 2. Throws
/// std::invalid_argument on a degenerate range or unsupported dimension.
double tv_histogram(const SampleSet& a, const SampleSet& b, const Binning& binning = {});

/// Rescales a diameter-2 total variation to the diameter-1 convention.
inline double half_tv(double tv) { return 0.5 * tv; }

/// 2 (1 - merged_fraction).
double tv_coupling_bound(double merged_fraction);

/// A real-valued law with known mean, for the law of large numbers studies.
struct ScalarLaw {
  std::function<double(Stream&)> sample;
  double mean = 0.0;
};

/// Pareto with minimum x_m and tail index a > 1.
ScalarLaw pareto_law(double x_m, double tail_index);
ScalarLaw gaussian_law(double mean, double sd);
ScalarLaw constant_law(double value);

struct LlnEstimate {
  double mean = 0.0;    // Monte Carlo estimate of E|mean_N - E xi|
  double std_error = 0.0;
};

/// reps independent blocks of size N; block r uses its own stream keyed by
/// (seed, lln role, N, r), so results do not depend on `workers`.
LlnEstimate lln_error(const ScalarLaw& law, std::size_t N, std::size_t reps,
                      std::uint64_t seed, int workers = 1);

/// inf over a > 0 of sqrt(2 a^{1-eps} m) N^{-1/2} + 2 m a^{-eps}, where
/// m = E|xi|^{1+eps}; the explicit truncation bound, with its minimizer in
/// closed form.
double lln_truncation_bound(double moment, double eps, double N);

struct RateFit {
  std::vector<double> xs;
  std::vector<double> ys;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

/// Least squares of log y on log x. At least 4 points, strictly increasing
/// positive xs, positive ys.
RateFit rate_fit(std::span<const double> xs, std::span<const double> ys);

}  // namespace chaosbench::metrics
