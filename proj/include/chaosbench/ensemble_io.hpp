#pragma once

#include <string>

#include "chaosbench/particles.hpp"

namespace chaosbench::particles {

/// Binary layout, little-endian host order: u64 N, u64 d, f64 time, u64 seed,
/// then N * d row-major f64.
void write_binary(const Ensemble& ens, const std::string& path);
Ensemble read_binary(const std::string& path);

/// One row per particle, columns x0..x{d-1}, 17 significant digits.
void write_csv(const Ensemble& ens, const std::string& path);

}  // namespace chaosbench::particles
