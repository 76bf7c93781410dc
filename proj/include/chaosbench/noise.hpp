#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "chaosbench/rng.hpp"

namespace chaosbench::noise {

enum class SmallJumpMode { drop, gaussian_approx };

/// Rotationally invariant alpha-stable noise with E exp(i<xi, Z_t>) =
/// exp(-t |xi|^alpha), Levy measure c_{d,alpha} |z|^{-d-alpha} dz, and the
/// truncation radius that separates simulated large jumps from the
/// compensated small-jump part.
struct StableSpec {
  double alpha = 1.5;
  int dim = 1;
  double normalization = 0.0;  // c_{d,alpha}
  double trunc = 0.1;
  SmallJumpMode small_jump_mode = SmallJumpMode::gaussian_approx;
};

/// c_{d,alpha} = alpha 2^{alpha-1} Gamma((d+alpha)/2) / (pi^{d/2} Gamma(1-alpha/2)).
double stable_normalization(int dim, double alpha);

/// Builds a StableSpec with the normalization filled in. Throws
/// std::invalid_argument for alpha outside (1,2), dim < 1 or trunc <= 0.
StableSpec make_stable_spec(double alpha, int dim, double trunc,
                            SmallJumpMode mode = SmallJumpMode::gaussian_approx);

double unit_sphere_area(int dim);
double unit_ball_volume(int dim);

void brownian_increment(double dt, Stream& rng, std::span<double> out);
std::vector<double> brownian_increment(double dt, int dim, Stream& rng);

/// Exact increment over dt by Gaussian subordination: Z = sqrt(2 S) G with S
/// a positive (alpha/2)-stable variable at time dt (Kanter's representation).
void stable_increment(const StableSpec& spec, double dt, Stream& rng, std::span<double> out);
std::vector<double> stable_increment(const StableSpec& spec, double dt, Stream& rng);

/// (|z| / max(|z|, |z - x|))^{d+alpha}. Throws std::domain_error at z = 0.
double rho_ratio(std::span<const double> x, std::span<const double> z, const StableSpec& spec);

/// nu^alpha({|z| > trunc}) = c S_d trunc^{-alpha} / alpha.
double large_jump_rate(const StableSpec& spec);

/// Large jumps of one step, stored flat: jump k occupies
/// z[k*dim .. (k+1)*dim) and happens at times[k] in [0, dt), sorted.
struct JumpBatch {
  int dim = 1;
  std::vector<double> times;
  std::vector<double> z;

  std::size_t size() const { return times.size(); }
  std::span<const double> jump(std::size_t k) const {
    return std::span<const double>(z).subspan(k * dim, dim);
  }
  void clear() {
    times.clear();
    z.clear();
  }
};

/// Compound-Poisson large jumps over [0, dt). Reuses the batch's storage.
void sample_jumps(const StableSpec& spec, double dt, Stream& rng, JumpBatch& out);
JumpBatch sample_jumps(const StableSpec& spec, double dt, Stream& rng);

/// Per-coordinate variance of the Gaussian stand-in for the jumps below trunc:
/// dt c S_d trunc^{2-alpha} / (d (2 - alpha)). Zero in drop mode.
double small_jump_variance(const StableSpec& spec, double dt);

void small_jump_compensation(const StableSpec& spec, double dt, Stream& rng,
                             std::span<double> out);
std::vector<double> small_jump_compensation(const StableSpec& spec, double dt, Stream& rng);

/// Uniform direction on the unit sphere.
void unit_direction(Stream& rng, std::span<double> out);

}  // namespace chaosbench::noise
