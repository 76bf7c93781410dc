#include "chaosbench/particles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "chaosbench/assignment.hpp"
#include "chaosbench/errors.hpp"
#include "chaosbench/integrator.hpp"
#include "chaosbench/metrics.hpp"
#include "chaosbench/parallel.hpp"

namespace chaosbench::particles {
namespace {

std::uint64_t step_count(double T, double dt, const char* what) {
  if (!(dt > 0.0)) throw std::invalid_argument(std::string(what) + ": dt must be > 0");
  if (!(T >= 0.0)) throw std::invalid_argument(std::string(what) + ": T must be >= 0");
  const double steps = std::round(T / dt);
  if (std::abs(steps * dt - T) > 1e-9 * std::max(1.0, T)) {
    throw std::invalid_argument(std::string(what) + ": T must be a multiple of dt");
  }
  return static_cast<std::uint64_t>(steps);
}

void column(const std::vector<double>& rows, int dim, int k, std::vector<double>& out) {
  const std::size_t n = rows.size() / dim;
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = rows[i * dim + k];
}

double flow_distance(const std::vector<double>& a, const std::vector<double>& b, int dim) {
  std::vector<double> ca, cb;
  double s = 0.0;
  for (int k = 0; k < dim; ++k) {
    column(a, dim, k, ca);
    column(b, dim, k, cb);
    s += metrics::w1_1d(ca, cb);
  }
  return s / dim;
}

std::vector<double> row_mean(const std::vector<double>& rows, int dim) {
  std::vector<double> m(dim, 0.0);
  const std::size_t n = rows.size() / dim;
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < dim; ++k) m[k] += rows[i * dim + k];
  }
  for (auto& v : m) v /= static_cast<double>(n);
  return m;
}

}  // namespace

Ensemble make_ensemble(std::size_t n, int dim) {
  if (dim < 1) throw std::invalid_argument("ensemble: dim must be >= 1");
  Ensemble e;
  e.n = n;
  e.dim = dim;
  e.positions.assign(n * dim, 0.0);
  return e;
}

void sample_initial(const InitialLaw& law, Stream& rng, std::span<double> out) {
  switch (law.kind) {
    case InitialKind::point:
      std::fill(out.begin(), out.end(), law.center);
      return;
    case InitialKind::gaussian:
      for (auto& c : out) c = law.center + law.scale * rng.normal();
      return;
    case InitialKind::pareto: {
      const double r = law.scale * (std::pow(rng.uniform(), -1.0 / law.tail) - 1.0);
      noise::unit_direction(rng, out);
      for (auto& c : out) c = law.center + r * c;
      return;
    }
  }
}

Ensemble sample_ensemble(const InitialLaw& law, std::size_t n, int dim, std::uint64_t seed,
                         StreamRole role, std::uint64_t replica) {
  Ensemble e = make_ensemble(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    Stream rng(StreamKey{seed, role, replica, i});
    sample_initial(law, rng, e.row(i));
  }
  e.meta.seed = seed;
  return e;
}

void mean_field_drifts(const model::ModelSpec& model, const Ensemble& ens, std::span<double> out,
                       bool force_direct) {
  const int d = ens.dim;
  if (out.size() != ens.positions.size() || d != model.dim) {
    throw std::invalid_argument("mean_field_drifts: shape mismatch");
  }
  if (ens.n == 0) return;
  const double inv_n = 1.0 / static_cast<double>(ens.n);
  if (!force_direct && model.b1.mean_separable()) {
    if (model.b1.kind == model::InteractionKind::zero) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    // curie-weiss: (1/N) sum_m -K_b (x - y_m) = -K_b (x - mean)
    const auto mean = row_mean(ens.positions, d);
    for (std::size_t i = 0; i < ens.n; ++i) {
      for (int k = 0; k < d; ++k) {
        out[i * d + k] = -model.b1.strength * (ens.positions[i * d + k] - mean[k]);
      }
    }
    return;
  }
  std::vector<double> term(d);
  for (std::size_t i = 0; i < ens.n; ++i) {
    auto acc = out.subspan(i * d, d);
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t m = 0; m < ens.n; ++m) {
      model::eval_b1(model, ens.row(i), ens.row(m), term);
      for (int k = 0; k < d; ++k) acc[k] += term[k];
    }
    for (auto& v : acc) v *= inv_n;
  }
}

void step_particle_system(Ensemble& ens, const model::ModelSpec& model, double dt,
                          std::span<Stream> streams) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_particle_system: dt must be > 0");
  if (streams.size() != ens.n) {
    throw std::invalid_argument("step_particle_system: one stream per particle required");
  }
  std::vector<double> mf(ens.positions.size());
  mean_field_drifts(model, ens, mf);
  const couplings::StepContext ctx{ens.time, dt, ens.meta.steps};
  const int d = ens.dim;
  for (std::size_t i = 0; i < ens.n; ++i) {
    integrator::uncoupled_step(model, ens.row(i), std::span<const double>(mf).subspan(i * d, d),
                               ctx, streams[i]);
  }
  ens.time += dt;
  ++ens.meta.steps;
  ens.meta.dt = dt;
}

void step_particle_system(Ensemble& ens, const model::ModelSpec& model, double dt,
                          std::span<const double> dW, std::span<const double> dB) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_particle_system: dt must be > 0");
  const int d = ens.dim;
  const auto nd = static_cast<std::size_t>(model.noise_dim());
  if (dW.size() != ens.positions.size() || (nd > 0 && dB.size() != ens.n * nd)) {
    throw std::invalid_argument("step_particle_system: noise shape mismatch");
  }
  std::vector<double> mf(ens.positions.size());
  mean_field_drifts(model, ens, mf);
  std::vector<double> inc(d);
  const double sb = model.profile.brownian() ? std::sqrt(model.profile.beta) : 1.0;
  for (std::size_t i = 0; i < ens.n; ++i) {
    auto x = ens.row(i);
    model::eval_b0(model, x, inc);
    for (int k = 0; k < d; ++k) inc[k] = (inc[k] + mf[i * d + k]) * dt + sb * dW[i * d + k];
    if (nd > 0) model::add_sigma_times(model, x, dB.subspan(i * nd, nd), inc);
    for (int k = 0; k < d; ++k) {
      x[k] += inc[k];
      if (!std::isfinite(x[k])) {
        throw NumericalFault("particle system left the finite range", ens.meta.steps);
      }
    }
  }
  ens.time += dt;
  ++ens.meta.steps;
  ens.meta.dt = dt;
}

Ensemble simulate_particle_system(const model::ModelSpec& model, const InitialLaw& law,
                                  std::size_t n, double T, double dt, std::uint64_t seed,
                                  std::uint64_t replica) {
  const auto steps = step_count(T, dt, "simulate_particle_system");
  Ensemble ens = sample_ensemble(law, n, model.dim, seed, StreamRole::initial_particles, replica);
  ens.meta.model_id = model.id();
  ens.meta.dt = dt;
  std::vector<Stream> streams;
  streams.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    streams.emplace_back(StreamKey{seed, StreamRole::particle_noise, replica, i});
  }
  for (std::uint64_t s = 0; s < steps; ++s) step_particle_system(ens, model, dt, streams);
  return ens;
}

std::size_t MeasureFlow::index_at(double t) const {
  if (snapshots.empty()) throw std::logic_error("MeasureFlow: no snapshots");
  const double k = std::floor(t / snapshot_dt + 1e-9);
  if (k <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(k), snapshots.size() - 1);
}

void MeasureFlow::interaction_drift(const model::ModelSpec& model, std::span<const double> x,
                                    double t, std::span<double> out) const {
  const std::size_t k = index_at(t);
  switch (model.b1.kind) {
    case model::InteractionKind::zero:
      std::fill(out.begin(), out.end(), 0.0);
      return;
    case model::InteractionKind::curie_weiss:
      for (int i = 0; i < dim; ++i) out[i] = -model.b1.strength * (x[i] - means[k][i]);
      return;
    case model::InteractionKind::bounded_tanh: {
      std::fill(out.begin(), out.end(), 0.0);
      const auto& snap = snapshots[k];
      for (std::size_t m = 0; m < M; ++m) {
        for (int i = 0; i < dim; ++i) {
          out[i] += model.b1.strength * std::tanh(x[i] - snap[m * dim + i]);
        }
      }
      for (auto& v : out) v /= static_cast<double>(M);
      return;
    }
  }
}

LimitFlowResult solve_limit_flow(const model::ModelSpec& model, const LimitFlowOptions& opt) {
  if (opt.M < 1) throw std::invalid_argument("solve_limit_flow: M must be >= 1");
  if (opt.picard_iters < 1) throw std::invalid_argument("solve_limit_flow: picard_iters must be >= 1");
  const auto per_snapshot = step_count(opt.snapshot_dt, opt.dt, "solve_limit_flow snapshot_dt");
  const auto n_snap = step_count(opt.T, opt.snapshot_dt, "solve_limit_flow T");
  if (per_snapshot < 1) throw std::invalid_argument("solve_limit_flow: snapshot_dt < dt");
  const int d = model.dim;

  Ensemble x0 = sample_ensemble(opt.mu0, opt.M, d, opt.seed, StreamRole::initial_limit, opt.replica);

  MeasureFlow prev;
  prev.dim = d;
  prev.M = opt.M;
  prev.snapshot_dt = opt.snapshot_dt;
  prev.grid = {0.0};
  prev.snapshots = {x0.positions};
  prev.means = {row_mean(x0.positions, d)};

  LimitFlowResult result;
  for (int it = 0; it < opt.picard_iters; ++it) {
    MeasureFlow cur;
    cur.dim = d;
    cur.M = opt.M;
    cur.snapshot_dt = opt.snapshot_dt;
    cur.grid.resize(n_snap + 1);
    for (std::uint64_t k = 0; k <= n_snap; ++k) cur.grid[k] = k * opt.snapshot_dt;
    cur.snapshots.assign(n_snap + 1, std::vector<double>(opt.M * d));
    cur.snapshots[0] = x0.positions;

    parallel_for(opt.M, opt.workers, [&](std::size_t m) {
      Stream rng(StreamKey{opt.seed, StreamRole::limit_noise, opt.replica, m});
      std::vector<double> x(x0.row(m).begin(), x0.row(m).end());
      std::vector<double> mf(d);
      std::uint64_t step = 0;
      for (std::uint64_t k = 1; k <= n_snap; ++k) {
        for (std::uint64_t j = 0; j < per_snapshot; ++j, ++step) {
          const double t = static_cast<double>(step) * opt.dt;
          prev.interaction_drift(model, x, t, mf);
          integrator::uncoupled_step(model, x, mf, couplings::StepContext{t, opt.dt, step}, rng);
        }
        std::copy(x.begin(), x.end(), cur.snapshots[k].begin() + m * d);
      }
    });
    cur.means.reserve(n_snap + 1);
    for (const auto& snap : cur.snapshots) cur.means.push_back(row_mean(snap, d));

    if (it > 0) {
      double change = 0.0;
      for (std::size_t k = 0; k < cur.snapshots.size(); ++k) {
        change = std::max(change, flow_distance(cur.snapshots[k], prev.snapshots[k], d));
      }
      result.changes.push_back(change);
    }
    prev = std::move(cur);
  }
  result.flow = std::move(prev);
  result.converged = result.changes.empty()
                         ? model.b1.kind == model::InteractionKind::zero
                         : result.changes.back() <= opt.tolerance;
  return result;
}

CoupledTrace simulate_coupled_systems(const model::ModelSpec& model, const MeasureFlow& flow,
                                      const CoupledRunOptions& opt) {
  if (opt.N < 1) throw std::invalid_argument("simulate_coupled_systems: N must be >= 1");
  if (flow.dim != model.dim) throw std::invalid_argument("simulate_coupled_systems: flow dimension");
  const auto steps = step_count(opt.T, opt.dt, "simulate_coupled_systems");
  if (opt.coupling == CouplingKind::reflection && !model.profile.brownian()) {
    throw std::invalid_argument("reflection coupling needs Brownian noise");
  }
  if (opt.coupling == CouplingKind::refined_basic) {
    if (model.profile.brownian()) throw std::invalid_argument("refined basic coupling needs stable noise");
    if (!opt.stable) throw std::invalid_argument("refined basic coupling needs a StableSpec");
  }
  const int d = model.dim;
  const std::size_t N = opt.N;

  Ensemble part = sample_ensemble(opt.mu0, N, d, opt.seed, StreamRole::initial_particles, opt.replica);
  Ensemble lim = sample_ensemble(opt.mu0, N, d, opt.seed, StreamRole::initial_limit, opt.replica);
  std::vector<std::size_t> partner(N);
  for (std::size_t i = 0; i < N; ++i) partner[i] = i;
  if (opt.pairing == Pairing::identical) {
    lim.positions = part.positions;
  } else if (opt.pairing == Pairing::optimal) {
    std::vector<double> cost(N * N);
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < N; ++j) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) {
          const double diff = part.positions[i * d + k] - lim.positions[j * d + k];
          s += diff * diff;
        }
        cost[i * N + j] = std::sqrt(s);
      }
    }
    partner = metrics::solve_assignment(cost, N).row_to_col;
  }

  std::vector<couplings::CoupledPair> pairs;
  pairs.reserve(N);
  for (std::size_t i = 0; i < N; ++i) {
    const auto l = lim.row(partner[i]);
    const auto p = part.row(i);
    pairs.push_back(couplings::make_pair({l.begin(), l.end()}, {p.begin(), p.end()}));
  }
  std::vector<Stream> streams;
  streams.reserve(N);
  for (std::size_t i = 0; i < N; ++i) {
    streams.emplace_back(StreamKey{opt.seed, StreamRole::pair_noise, opt.replica, i});
  }

  std::vector<std::uint64_t> record_steps{0};
  for (double t : opt.record_times) {
    const auto s = static_cast<std::uint64_t>(std::llround(t / opt.dt));
    if (s <= steps) record_steps.push_back(s);
  }
  std::sort(record_steps.begin(), record_steps.end());
  record_steps.erase(std::unique(record_steps.begin(), record_steps.end()), record_steps.end());

  CoupledTrace trace;
  auto record = [&](std::uint64_t s) {
    double sum = 0.0;
    std::size_t merged = 0;
    for (const auto& p : pairs) {
      sum += p.distance();
      merged += p.merged;
    }
    trace.times.push_back(static_cast<double>(s) * opt.dt);
    trace.sum_distance.push_back(sum);
    trace.merged_fraction.push_back(static_cast<double>(merged) / static_cast<double>(N));
  };

  std::size_t next_record = 0;
  if (record_steps[next_record] == 0) {
    record(0);
    ++next_record;
  }
  std::vector<double> mf_part(N * d), mf_lim(d);
  for (std::uint64_t s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * opt.dt;
    for (std::size_t i = 0; i < N; ++i) {
      std::copy(pairs[i].x_particle.begin(), pairs[i].x_particle.end(),
                part.positions.begin() + i * d);
    }
    mean_field_drifts(model, part, mf_part);
    const couplings::StepContext ctx{t, opt.dt, s};
    for (std::size_t i = 0; i < N; ++i) {
      auto& pair = pairs[i];
      flow.interaction_drift(model, pair.x_limit, t, mf_lim);
      const auto mfp = std::span<const double>(mf_part).subspan(i * d, d);
      switch (opt.coupling) {
        case CouplingKind::reflection:
          couplings::reflection_step(pair, model, mf_lim, mfp, ctx, opt.cutoff, streams[i]);
          break;
        case CouplingKind::refined_basic:
          couplings::refined_basic_step(pair, model, mf_lim, mfp, ctx, opt.cutoff, opt.kappa,
                                        *opt.stable, streams[i]);
          break;
        case CouplingKind::synchronous:
          couplings::synchronous_step(pair, model, mf_lim, mfp, ctx, streams[i]);
          break;
      }
    }
    while (next_record < record_steps.size() && record_steps[next_record] == s + 1) {
      record(s + 1);
      ++next_record;
    }
  }
  return trace;
}

std::vector<double> sample_marginal(const Ensemble& ens, std::size_t k) {
  if (k < 1 || k > ens.n) throw std::invalid_argument("sample_marginal: k out of range");
  return std::vector<double>(ens.positions.begin(), ens.positions.begin() + k * ens.dim);
}

}  // namespace chaosbench::particles
