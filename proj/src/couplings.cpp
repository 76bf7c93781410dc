#include "chaosbench/couplings.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "chaosbench/errors.hpp"

namespace chaosbench::couplings {
namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

// Scratch buffers reused across steps on the same thread.
struct Scratch {
  std::vector<double> drift_l, drift_p, dW, dWt, dB, u, xk, diff, inc;
  noise::JumpBatch jumps;

  void resize(std::size_t d) {
    for (auto* v : {&drift_l, &drift_p, &dW, &dWt, &dB, &u, &xk, &diff, &inc}) v->resize(d);
  }
};

Scratch& scratch(std::size_t d) {
  thread_local Scratch s;
  s.resize(d);
  return s;
}

void full_drift(const model::ModelSpec& m, std::span<const double> x,
                std::span<const double> mean_field, std::span<double> out) {
  model::eval_b0(m, x, out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += mean_field[i];
}

void check_finite(const CoupledPair& p, const StepContext& ctx) {
  for (std::size_t i = 0; i < p.x_limit.size(); ++i) {
    if (!std::isfinite(p.x_limit[i]) || !std::isfinite(p.x_particle[i])) {
      throw NumericalFault("coupled pair left the finite range", ctx.step);
    }
  }
}

void check_shapes(const CoupledPair& p, const model::ModelSpec& m,
                  std::span<const double> mf_l, std::span<const double> mf_p) {
  const auto d = static_cast<std::size_t>(m.dim);
  if (p.x_limit.size() != d || p.x_particle.size() != d || mf_l.size() != d ||
      mf_p.size() != d) {
    throw std::invalid_argument("coupled step: dimension mismatch");
  }
}

}  // namespace

CutoffSpec make_cutoff(double epsilon, std::optional<double> merge_radius) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("cutoff: epsilon must be > 0");
  const double mr = merge_radius.value_or(epsilon / 4.0);
  if (!(mr >= 0.0 && mr < epsilon / 2.0)) {
    throw std::invalid_argument("cutoff: merge_radius must lie in [0, epsilon/2)");
  }
  return CutoffSpec{epsilon, mr};
}

double pi_R(double r, const CutoffSpec& c) {
  const double half = c.epsilon / 2.0;
  return std::clamp((r - half) / half, 0.0, 1.0);
}

double pi_S(double r, const CutoffSpec& c) {
  const double p = pi_R(r, c);
  return std::sqrt(1.0 - p * p);
}

void truncate_kappa(std::span<const double> x, const KappaSpec& k, std::span<double> out) {
  const double n = norm(x);
  const double scale = n > k.kappa ? k.kappa / n : 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = scale * x[i];
}

std::vector<double> truncate_kappa(std::span<const double> x, const KappaSpec& k) {
  std::vector<double> out(x.size());
  truncate_kappa(x, k, out);
  return out;
}

double CoupledPair::distance() const {
  double s = 0.0;
  for (std::size_t i = 0; i < x_limit.size(); ++i) {
    const double d = x_limit[i] - x_particle[i];
    s += d * d;
  }
  return std::sqrt(s);
}

CoupledPair make_pair(std::vector<double> x_limit, std::vector<double> x_particle) {
  if (x_limit.size() != x_particle.size()) {
    throw std::invalid_argument("make_pair: members differ in dimension");
  }
  CoupledPair p;
  p.x_limit = std::move(x_limit);
  p.x_particle = std::move(x_particle);
  return p;
}

void update_merge(CoupledPair& pair, const CutoffSpec& cutoff, double t_after) {
  if (pair.merged) return;
  if (pair.distance() < cutoff.merge_radius) {
    if (pair.pending) {
      pair.merged = true;
      pair.merge_time = pair.pending_since;
      pair.pending = false;
    } else {
      pair.pending = true;
      pair.pending_since = t_after;
    }
  } else {
    pair.pending = false;
  }
}

void reflection_step(CoupledPair& pair, const model::ModelSpec& model,
                     std::span<const double> mf_l, std::span<const double> mf_p,
                     const StepContext& ctx, const CutoffSpec& cutoff, Stream& rng) {
  if (!model.profile.brownian()) {
    throw std::invalid_argument("reflection_step needs Brownian noise (alpha = 2)");
  }
  check_shapes(pair, model, mf_l, mf_p);
  const std::size_t d = pair.x_limit.size();
  auto& s = scratch(d);

  full_drift(model, pair.x_limit, mf_l, s.drift_l);
  full_drift(model, pair.x_particle, mf_p, s.drift_p);

  const double r = pair.distance();
  const double pr = pair.merged ? 0.0 : pi_R(r, cutoff);
  const double ps = std::sqrt(1.0 - pr * pr);
  if (r > 0.0) {
    for (std::size_t i = 0; i < d; ++i) s.u[i] = (pair.x_limit[i] - pair.x_particle[i]) / r;
  } else {
    std::fill(s.u.begin(), s.u.end(), 0.0);
  }

  noise::brownian_increment(ctx.dt, rng, s.dW);
  noise::brownian_increment(ctx.dt, rng, s.dWt);
  if (model.noise_dim() > 0) noise::brownian_increment(ctx.dt, rng, s.dB);

  double u_dot_dw = 0.0;
  for (std::size_t i = 0; i < d; ++i) u_dot_dw += s.u[i] * s.dW[i];

  const double sb = std::sqrt(model.profile.beta);
  std::vector<double>& inc_l = s.diff;
  std::vector<double>& inc_p = s.inc;
  for (std::size_t i = 0; i < d; ++i) {
    inc_l[i] = s.drift_l[i] * ctx.dt + sb * (pr * s.dW[i] + ps * s.dWt[i]);
    const double reflected = s.dW[i] - 2.0 * s.u[i] * u_dot_dw;
    inc_p[i] = s.drift_p[i] * ctx.dt + sb * (pr * reflected + ps * s.dWt[i]);
  }
  if (model.noise_dim() > 0) {
    model::add_sigma_times(model, pair.x_limit, s.dB, inc_l);
    model::add_sigma_times(model, pair.x_particle, s.dB, inc_p);
  }
  for (std::size_t i = 0; i < d; ++i) {
    pair.x_limit[i] += inc_l[i];
    pair.x_particle[i] += inc_p[i];
  }
  check_finite(pair, ctx);
  update_merge(pair, cutoff, ctx.t + ctx.dt);
}

void refined_basic_step(CoupledPair& pair, const model::ModelSpec& model,
                        std::span<const double> mf_l, std::span<const double> mf_p,
                        const StepContext& ctx, const CutoffSpec& cutoff,
                        const KappaSpec& kappa, const noise::StableSpec& stable, Stream& rng,
                        BranchTally* tally) {
  if (model.profile.brownian()) {
    throw std::invalid_argument("refined_basic_step needs stable noise (alpha < 2)");
  }
  check_shapes(pair, model, mf_l, mf_p);
  const std::size_t d = pair.x_limit.size();
  auto& s = scratch(d);

  full_drift(model, pair.x_limit, mf_l, s.drift_l);
  full_drift(model, pair.x_particle, mf_p, s.drift_p);
  for (std::size_t i = 0; i < d; ++i) {
    pair.x_limit[i] += s.drift_l[i] * ctx.dt;
    pair.x_particle[i] += s.drift_p[i] * ctx.dt;
  }

  noise::sample_jumps(stable, ctx.dt, rng, s.jumps);
  for (std::size_t k = 0; k < s.jumps.size(); ++k) {
    const auto z = s.jumps.jump(k);
    const double u = rng.uniform();
    for (std::size_t i = 0; i < d; ++i) s.diff[i] = pair.x_limit[i] - pair.x_particle[i];
    const double r = norm(s.diff);
    const double pr = pair.merged ? 0.0 : pi_R(r, cutoff);

    double shift_sign = 0.0;
    if (pr > 0.0) {
      truncate_kappa(s.diff, kappa, s.xk);
      for (std::size_t i = 0; i < d; ++i) s.u[i] = -s.xk[i];
      const double p_plus = 0.5 * pr * noise::rho_ratio(s.u, z, stable);
      const double p_minus = 0.5 * pr * noise::rho_ratio(s.xk, z, stable);
      if (u <= p_plus) {
        shift_sign = 1.0;
      } else if (u <= p_plus + p_minus) {
        shift_sign = -1.0;
      }
      if (tally) {
        tally->expected_plus += p_plus;
        tally->expected_minus += p_minus;
        tally->branch_plus += shift_sign > 0.0;
        tally->branch_minus += shift_sign < 0.0;
      }
    }
    if (tally) ++tally->jumps;
    for (std::size_t i = 0; i < d; ++i) {
      pair.x_limit[i] += z[i];
      pair.x_particle[i] += z[i] + (shift_sign != 0.0 ? shift_sign * s.xk[i] : 0.0);
    }
  }

  noise::small_jump_compensation(stable, ctx.dt, rng, s.inc);
  for (std::size_t i = 0; i < d; ++i) {
    pair.x_limit[i] += s.inc[i];
    pair.x_particle[i] += s.inc[i];
  }
  check_finite(pair, ctx);
  update_merge(pair, cutoff, ctx.t + ctx.dt);
}

void synchronous_step(CoupledPair& pair, const model::ModelSpec& model,
                      std::span<const double> mf_l, std::span<const double> mf_p,
                      const StepContext& ctx, Stream& rng) {
  check_shapes(pair, model, mf_l, mf_p);
  const std::size_t d = pair.x_limit.size();
  auto& s = scratch(d);

  full_drift(model, pair.x_limit, mf_l, s.drift_l);
  full_drift(model, pair.x_particle, mf_p, s.drift_p);

  std::vector<double>& inc_l = s.diff;
  std::vector<double>& inc_p = s.inc;
  if (model.profile.brownian()) {
    noise::brownian_increment(ctx.dt, rng, s.dW);
    if (model.noise_dim() > 0) noise::brownian_increment(ctx.dt, rng, s.dB);
    const double sb = std::sqrt(model.profile.beta);
    for (std::size_t i = 0; i < d; ++i) {
      inc_l[i] = s.drift_l[i] * ctx.dt + sb * s.dW[i];
      inc_p[i] = s.drift_p[i] * ctx.dt + sb * s.dW[i];
    }
    if (model.noise_dim() > 0) {
      model::add_sigma_times(model, pair.x_limit, s.dB, inc_l);
      model::add_sigma_times(model, pair.x_particle, s.dB, inc_p);
    }
  } else {
    const noise::StableSpec spec{model.profile.alpha, model.dim, 0.0, 1.0,
                                 noise::SmallJumpMode::drop};
    noise::stable_increment(spec, ctx.dt, rng, s.dW);
    for (std::size_t i = 0; i < d; ++i) {
      inc_l[i] = s.drift_l[i] * ctx.dt + s.dW[i];
      inc_p[i] = s.drift_p[i] * ctx.dt + s.dW[i];
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    pair.x_limit[i] += inc_l[i];
    pair.x_particle[i] += inc_p[i];
  }
  check_finite(pair, ctx);
}

}  // namespace chaosbench::couplings
