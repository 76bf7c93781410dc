#include "chaosbench/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace chaosbench::noise {

double stable_normalization(int dim, double alpha) {
  const double pi = std::numbers::pi;
  return alpha * std::pow(2.0, alpha - 1.0) * std::tgamma((dim + alpha) / 2.0) /
         (std::pow(pi, dim / 2.0) * std::tgamma(1.0 - alpha / 2.0));
}

StableSpec make_stable_spec(double alpha, int dim, double trunc, SmallJumpMode mode) {
  if (!(alpha > 1.0 && alpha < 2.0)) {
    throw std::invalid_argument("stable noise needs alpha in (1, 2)");
  }
  if (dim < 1) throw std::invalid_argument("stable noise needs dim >= 1");
  if (!(trunc > 0.0)) throw std::invalid_argument("stable noise needs trunc > 0");
  return StableSpec{alpha, dim, stable_normalization(dim, alpha), trunc, mode};
}

double unit_sphere_area(int dim) {
  return 2.0 * std::pow(std::numbers::pi, dim / 2.0) / std::tgamma(dim / 2.0);
}

double unit_ball_volume(int dim) {
  return std::pow(std::numbers::pi, dim / 2.0) / std::tgamma(dim / 2.0 + 1.0);
}

void brownian_increment(double dt, Stream& rng, std::span<double> out) {
  const double s = dt > 0.0 ? std::sqrt(dt) : 0.0;
  for (auto& v : out) v = s * rng.normal();
}

std::vector<double> brownian_increment(double dt, int dim, Stream& rng) {
  std::vector<double> out(dim);
  brownian_increment(dt, rng, out);
  return out;
}

void stable_increment(const StableSpec& spec, double dt, Stream& rng, std::span<double> out) {
  const double a = spec.alpha / 2.0;
  const double v = std::numbers::pi * rng.uniform();
  const double e = rng.exponential();
  const double s1 = std::sin(a * v) / std::pow(std::sin(v), 1.0 / a) *
                    std::pow(std::sin((1.0 - a) * v) / e, (1.0 - a) / a);
  const double s = std::pow(dt, 2.0 / spec.alpha) * s1;
  const double scale = std::sqrt(2.0 * s);
  for (auto& c : out) c = scale * rng.normal();
}

std::vector<double> stable_increment(const StableSpec& spec, double dt, Stream& rng) {
  std::vector<double> out(spec.dim);
  stable_increment(spec, dt, rng, out);
  return out;
}

double rho_ratio(std::span<const double> x, std::span<const double> z, const StableSpec& spec) {
  double zz = 0.0, dd = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    zz += z[i] * z[i];
    const double diff = z[i] - x[i];
    dd += diff * diff;
  }
  if (zz == 0.0) throw std::domain_error("rho_ratio: z must be nonzero");
  if (dd <= zz) return 1.0;
  return std::pow(zz / dd, (spec.dim + spec.alpha) / 2.0);
}

double large_jump_rate(const StableSpec& spec) {
  return spec.normalization * unit_sphere_area(spec.dim) *
         std::pow(spec.trunc, -spec.alpha) / spec.alpha;
}

void unit_direction(Stream& rng, std::span<double> out) {
  if (out.size() == 1) {
    out[0] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    return;
  }
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (auto& c : out) {
      c = rng.normal();
      n2 += c * c;
    }
  } while (n2 == 0.0);
  const double inv = 1.0 / std::sqrt(n2);
  for (auto& c : out) c *= inv;
}

void sample_jumps(const StableSpec& spec, double dt, Stream& rng, JumpBatch& out) {
  out.dim = spec.dim;
  out.clear();
  if (!(dt > 0.0)) return;
  const std::uint64_t count = rng.poisson(dt * large_jump_rate(spec));
  if (count == 0) return;

  std::vector<double> t(count);
  for (auto& v : t) v = dt * rng.uniform();
  std::vector<double> z(count * spec.dim);
  for (std::uint64_t k = 0; k < count; ++k) {
    const double r = spec.trunc * std::pow(rng.uniform(), -1.0 / spec.alpha);
    auto dir = std::span<double>(z).subspan(k * spec.dim, spec.dim);
    unit_direction(rng, dir);
    for (auto& c : dir) c *= r;
  }

  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return t[a] < t[b]; });
  out.times.reserve(count);
  out.z.reserve(count * spec.dim);
  for (std::size_t k : order) {
    out.times.push_back(t[k]);
    out.z.insert(out.z.end(), z.begin() + k * spec.dim, z.begin() + (k + 1) * spec.dim);
  }
}

JumpBatch sample_jumps(const StableSpec& spec, double dt, Stream& rng) {
  JumpBatch b;
  sample_jumps(spec, dt, rng, b);
  return b;
}

double small_jump_variance(const StableSpec& spec, double dt) {
  if (spec.small_jump_mode == SmallJumpMode::drop || !(dt > 0.0)) return 0.0;
  return dt * spec.normalization * unit_sphere_area(spec.dim) *
         std::pow(spec.trunc, 2.0 - spec.alpha) / (spec.dim * (2.0 - spec.alpha));
}

void small_jump_compensation(const StableSpec& spec, double dt, Stream& rng,
                             std::span<double> out) {
  if (spec.small_jump_mode == SmallJumpMode::drop) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double s = std::sqrt(small_jump_variance(spec, dt));
  for (auto& c : out) c = s * rng.normal();
}

std::vector<double> small_jump_compensation(const StableSpec& spec, double dt, Stream& rng) {
  std::vector<double> out(spec.dim);
  small_jump_compensation(spec, dt, rng, out);
  return out;
}

}  // namespace chaosbench::noise
