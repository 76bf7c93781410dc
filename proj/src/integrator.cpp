#include "chaosbench/integrator.hpp"

#include <cmath>
#include <vector>

#include "chaosbench/errors.hpp"

namespace chaosbench::integrator {
namespace {

void finish(std::span<double> x, std::span<const double> inc, std::uint64_t step) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] += inc[i];
    if (!std::isfinite(x[i])) throw NumericalFault("particle left the finite range", step);
  }
}

}  // namespace

void uncoupled_step(const model::ModelSpec& model, std::span<double> x,
                    std::span<const double> mean_field, const couplings::StepContext& ctx,
                    Stream& rng) {
  const std::size_t d = x.size();
  thread_local std::vector<double> inc, dW, dB;
  inc.resize(d);
  dW.resize(d);
  model::eval_b0(model, x, inc);
  for (std::size_t i = 0; i < d; ++i) inc[i] = (inc[i] + mean_field[i]) * ctx.dt;

  if (model.profile.brownian()) {
    noise::brownian_increment(ctx.dt, rng, dW);
    const double sb = std::sqrt(model.profile.beta);
    for (std::size_t i = 0; i < d; ++i) inc[i] += sb * dW[i];
    if (model.noise_dim() > 0) {
      dB.resize(model.noise_dim());
      noise::brownian_increment(ctx.dt, rng, dB);
      model::add_sigma_times(model, x, dB, inc);
    }
  } else {
    const noise::StableSpec spec{model.profile.alpha, model.dim, 0.0, 1.0,
                                 noise::SmallJumpMode::drop};
    noise::stable_increment(spec, ctx.dt, rng, dW);
    for (std::size_t i = 0; i < d; ++i) inc[i] += dW[i];
  }
  finish(x, inc, ctx.step);
}

void jump_resolved_step(const model::ModelSpec& model, std::span<double> x,
                        std::span<const double> mean_field, const couplings::StepContext& ctx,
                        const noise::StableSpec& stable, Stream& rng) {
  const std::size_t d = x.size();
  thread_local std::vector<double> inc, comp;
  thread_local noise::JumpBatch jumps;
  inc.resize(d);
  comp.resize(d);
  model::eval_b0(model, x, inc);
  for (std::size_t i = 0; i < d; ++i) inc[i] = (inc[i] + mean_field[i]) * ctx.dt;

  // Same draw order as refined_basic_step: jumps, one thinning uniform per
  // jump, then the compensation.
  noise::sample_jumps(stable, ctx.dt, rng, jumps);
  for (std::size_t k = 0; k < jumps.size(); ++k) {
    (void)rng.uniform();
    const auto z = jumps.jump(k);
    for (std::size_t i = 0; i < d; ++i) inc[i] += z[i];
  }
  noise::small_jump_compensation(stable, ctx.dt, rng, comp);
  for (std::size_t i = 0; i < d; ++i) inc[i] += comp[i];
  finish(x, inc, ctx.step);
}

}  // namespace chaosbench::integrator
