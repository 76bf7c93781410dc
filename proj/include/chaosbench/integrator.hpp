#pragma once

#include <span>

#include "chaosbench/couplings.hpp"
#include "chaosbench/model.hpp"
#include "chaosbench/noise.hpp"
#include "chaosbench/rng.hpp"

namespace chaosbench::integrator {

/// One uncoupled step of a single particle with a precomputed mean-field
/// term. Brownian case: Euler-Maruyama with sqrt(beta) dW + sigma(x) dB.
/// Stable case: Euler drift plus an exact stable increment.
void uncoupled_step(const model::ModelSpec& model, std::span<double> x,
                    std::span<const double> mean_field, const couplings::StepContext& ctx,
                    Stream& rng);

/// Stable case with the noise split as in the refined basic coupling: drift,
/// then the large jumps, then the small-jump compensation. This is the law
/// each member of a refined-basic pair follows on its own.
void jump_resolved_step(const model::ModelSpec& model, std::span<double> x,
                        std::span<const double> mean_field, const couplings::StepContext& ctx,
                        const noise::StableSpec& stable, Stream& rng);

}  // namespace chaosbench::integrator
