#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace chaosbench {

/// What a stream is used for. Part of the stream key, so two roles never
/// share random numbers even at equal (replica, particle) indices.
enum class StreamRole : std::uint64_t {
  particle_noise = 1,
  limit_noise = 2,
  pair_noise = 3,
  initial_particles = 4,
  initial_limit = 5,
  audit = 6,
  lln = 7,
  marginal_check = 8,
  generic = 9,
};

/// Counter-style key for a random stream. Streams derived from distinct keys
/// are statistically independent; adding replicas or particles never changes
/// the stream of an existing (replica, particle) index.
struct StreamKey {
  std::uint64_t seed = 0;
  StreamRole role = StreamRole::generic;
  std::uint64_t replica = 0;
  std::uint64_t particle = 0;
};

std::uint64_t derive_stream_seed(const StreamKey& key);

/// xoshiro256** seeded through splitmix64. Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()();

 private:
  std::array<std::uint64_t, 4> s_{};
};

/// A single random stream with the handful of variates the simulators need.
/// All sampling in the library goes through an explicit Stream; there is no
/// global generator.
class Stream {
 public:
  explicit Stream(std::uint64_t seed = 0) : engine_(seed) {}
  explicit Stream(const StreamKey& key) : engine_(derive_stream_seed(key)) {}

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal() { return normal_(engine_); }
  double exponential() { return -std::log(uniform()); }
  std::uint64_t poisson(double mean);

  Xoshiro256& engine() { return engine_; }

 private:
  Xoshiro256 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace chaosbench
