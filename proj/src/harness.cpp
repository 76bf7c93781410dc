#include "chaosbench/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "chaosbench/constants.hpp"
#include "chaosbench/couplings.hpp"
#include "chaosbench/integrator.hpp"
#include "chaosbench/metrics.hpp"
#include "chaosbench/noise.hpp"
#include "chaosbench/parallel.hpp"
#include "chaosbench/particles.hpp"
#include "chaosbench/rng.hpp"
#include "chaosbench/stats.hpp"

namespace chaosbench::harness {
namespace {

using nlohmann::json;

// Particle replicas pooled into one sample of the 1-marginal in tv_n_scaling.
constexpr std::size_t kPooledReplicas = 16;
// Increments per truncation radius in the characteristic-function study.
constexpr std::size_t kCfSamples = 100000;

struct Context {
  const ExperimentConfig& config;
  const model::ModelSpec& model;
  int workers;
  ExperimentReport& report;

  void add(std::string parameter, double value, double estimate, double se,
           std::optional<double> bound, bool pass) {
    report.rows.push_back(ReportRow{scenario_name(config.scenario), std::move(parameter), value,
                                    estimate, se, bound, pass});
  }
  double tv(double v) const { return config.half_tv ? metrics::half_tv(v) : v; }
};

std::uint64_t steps_for(double T, double dt) {
  const double k = std::round(T / dt);
  if (k < 1.0 || std::abs(k * dt - T) > 1e-9 * std::max(1.0, T)) {
    throw std::invalid_argument(fmt::format("horizon {} is not a multiple of dt = {}", T, dt));
  }
  return static_cast<std::uint64_t>(k);
}

double sigma_scale(const model::ModelSpec& m) {
  switch (m.sigma.kind) {
    case model::DiffusionKind::zero: return 0.0;
    case model::DiffusionKind::identity: return 1.0;
    case model::DiffusionKind::constant: return m.sigma.scale;
    case model::DiffusionKind::scalar_tanh: break;
  }
  throw std::invalid_argument("sigma is not constant");
}

struct StableSetup {
  constants::StableConstants sc;
  noise::StableSpec spec;
  couplings::KappaSpec kappa;
};

StableSetup stable_setup(const ExperimentConfig& c, const model::ModelSpec& m) {
  const double kappa = c.kappa.value_or(m.profile.R);
  const double eta =
      c.eta_optimal ? constants::optimal_eta(m.profile, m.dim, kappa) : c.eta.value_or(0.5);
  StableSetup s;
  s.sc = constants::stable_constants(m.profile, m.dim, eta, kappa);
  s.spec = noise::make_stable_spec(m.profile.alpha, m.dim, c.trunc.value_or(kappa / 10.0));
  s.kappa = couplings::KappaSpec{kappa};
  return s;
}

json admissibility_json(const constants::Admissibility& a) {
  return {{"holds", a.holds}, {"threshold", a.threshold}, {"margin", a.margin}};
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / static_cast<double>(n - 1);
  return out;
}

// ---- constants_report -----------------------------------------------------

void run_constants_report(Context& ctx) {
  const auto& c = ctx.config;
  const auto& m = ctx.model;
  const json cj = constants_json(m, c.eta, c.eta_optimal, c.kappa);
  ctx.report.details["constants"] = cj;

  PlotSpec plot;
  if (m.profile.brownian()) {
    const auto& b = cj.at("brownian");
    const double f0 = b.at("f_prime_0"), slope = b.at("slope_at_infinity");
    const double lambda = b.at("lambda");
    const auto& adm = b.at("admissibility");
    ctx.add("f_prime_0", 0.0, f0, 0.0, std::nullopt, true);
    ctx.add("slope_at_infinity", 0.0, slope, 0.0, std::nullopt, true);
    ctx.add("prefactor", 0.0, b.at("prefactor").get<double>(), 0.0, std::nullopt, true);
    ctx.add("lambda", 0.0, lambda, 0.0, std::nullopt, true);
    ctx.add("admissibility_margin", m.profile.K_b, adm.at("margin").get<double>(), 0.0,
            adm.at("threshold").get<double>(), adm.at("holds").get<bool>());

    const auto rs = linspace(0.0, std::max(4.0 * m.profile.R, 1.0), 81);
    PlotSeries fp{"f'(r)", rs, {}, false};
    for (double r : rs) fp.ys.push_back(constants::f_prime(r, m.profile));
    PlotSeries asym{"2 beta / (K2 - K_sigma)", rs, std::vector<double>(rs.size(), slope), true};
    plot = PlotSpec{"Distance function derivative", "r", "f'(r)", false, false, {fp, asym}};
  } else {
    const auto& s = cj.at("stable");
    const auto& adm = s.at("admissibility");
    for (const char* key : {"c_dalpha", "c_tilde", "eta", "kappa", "c1", "prefactor", "lambda"}) {
      ctx.add(key, 0.0, s.at(key).get<double>(), 0.0, std::nullopt, true);
    }
    ctx.add("admissibility_margin", m.profile.K_b, adm.at("margin").get<double>(), 0.0,
            adm.at("threshold").get<double>(), adm.at("holds").get<bool>());

    const auto sc = stable_setup(c, m).sc;
    const auto rs = linspace(0.0, 3.0 * sc.ell0, 81);
    PlotSeries pp{"psi'(r)", rs, {}, false};
    for (double r : rs) pp.ys.push_back(constants::psi_prime(r, sc));
    plot = PlotSpec{"Distance function derivative", "r", "psi'(r)", false, false, {pp}};
  }
  ctx.report.plots.push_back(std::move(plot));

  const auto audit = model::audit_assumptions(m, 20000, 10.0, c.seed);
  ctx.report.details["audit"] = {{"checked_pairs", audit.checked_pairs},
                                 {"worst_violation", audit.worst_violation},
                                 {"lipschitz_b1_estimate", audit.lipschitz_b1_estimate},
                                 {"sigma_violation", audit.sigma_violation},
                                 {"passed", audit.passed}};
  ctx.add("audit_worst_violation", static_cast<double>(audit.checked_pairs), audit.worst_violation,
          0.0, 0.0, audit.passed);
}

// ---- lln_rate -----------------------------------------------------------

void run_lln_rate(Context& ctx) {
  const auto& c = ctx.config;
  const double a = c.tail_index, eps = c.lln_eps;
  const auto law = metrics::pareto_law(1.0, a);
  const double moment = a / (a - (1.0 + eps));  // E xi^{1+eps} for Pareto(1, a)

  std::vector<double> Ns, errs, bounds;
  for (std::size_t N : c.N_grid) {
    const auto est = metrics::lln_error(law, N, c.reps, c.seed, ctx.workers);
    const double bound = metrics::lln_truncation_bound(moment, eps, static_cast<double>(N));
    ctx.add("mean_abs_error", static_cast<double>(N), est.mean, est.std_error, bound,
            est.mean - 2.0 * est.std_error <= bound);
    Ns.push_back(static_cast<double>(N));
    errs.push_back(est.mean);
    bounds.push_back(bound);
  }
  const auto fit = metrics::rate_fit(Ns, errs);
  const double theory = -eps / (1.0 + eps);
  ctx.add("loglog_slope", theory, fit.slope, fit.slope_stderr, theory + 0.08,
          fit.slope <= theory + 0.08);
  ctx.report.details["fit"] = {
      {"slope", fit.slope}, {"intercept", fit.intercept}, {"slope_stderr", fit.slope_stderr}};
  ctx.report.details["moment"] = moment;

  PlotSeries fitted{"fit", Ns, {}, true};
  for (double N : Ns) fitted.ys.push_back(std::exp(fit.intercept) * std::pow(N, fit.slope));
  ctx.report.plots.push_back(PlotSpec{"Law of large numbers error", "N", "E|mean - E xi|", true,
                                      true,
                                      {{"estimate", Ns, errs, false},
                                       {"truncation bound", Ns, bounds, true},
                                       fitted}});
}

// ---- ou_exact -------------------------------------------------------------

void run_ou_exact(Context& ctx) {
  const auto& c = ctx.config;
  const auto& m = ctx.model;
  const int d = m.dim;
  const std::size_t n = c.replicas;
  const auto steps = steps_for(c.T, c.dt);

  std::vector<double> finals(n);
  parallel_for(n, ctx.workers, [&](std::size_t i) {
    Stream rng(StreamKey{c.seed, StreamRole::particle_noise, 0, i});
    std::vector<double> x(d, c.mu0.center), mf(d, 0.0);
    for (std::uint64_t s = 0; s < steps; ++s) {
      integrator::uncoupled_step(m, x, mf, couplings::StepContext{s * c.dt, c.dt, s}, rng);
    }
    finals[i] = x[0];
  });

  const auto mv = stats::mean_var(finals);
  const auto oracle =
      ou_moments(m.b0.kappa, m.profile.beta, sigma_scale(m), c.mu0.center, c.T);
  ctx.add("mean", c.T, mv.mean, mv.mean_stderr, oracle.mean,
          std::abs(mv.mean - oracle.mean) <= 3.0 * mv.mean_stderr);
  ctx.add("variance", c.T, mv.variance, mv.variance_stderr, oracle.variance,
          std::abs(mv.variance - oracle.variance) <= 3.0 * mv.variance_stderr);

  std::vector<double> exact(n);
  const double sd = std::sqrt(oracle.variance);
  for (std::size_t i = 0; i < n; ++i) {
    Stream rng(StreamKey{c.seed, StreamRole::generic, 0, i});
    exact[i] = oracle.mean + sd * rng.normal();
  }
  metrics::Binning bins;
  bins.rule = metrics::Binning::Rule::fixed;
  bins.bins = c.bins;
  bins.lo = {c.range ? c.range->first : oracle.mean - 4.0 * sd};
  bins.hi = {c.range ? c.range->second : oracle.mean + 4.0 * sd};
  const double tv = ctx.tv(metrics::tv_histogram({finals, 1}, {exact, 1}, bins));
  const double tol = ctx.tv(c.tv_tolerance);
  ctx.add("tv_histogram", c.T, tv, 0.0, tol, tv < tol);
  ctx.report.details["oracle"] = {{"mean", oracle.mean}, {"variance", oracle.variance}};
}

// ---- contraction ------------------------------------------------------------

struct TimeStats {
  std::vector<double> times, est, se, tv_est, tv_se;
};

TimeStats summarize(const std::vector<particles::CoupledTrace>& traces, std::size_t N) {
  TimeStats out;
  out.times = traces.front().times;
  const std::size_t R = traces.size();
  for (std::size_t k = 0; k < out.times.size(); ++k) {
    std::vector<double> dist(R), tvb(R);
    for (std::size_t r = 0; r < R; ++r) {
      dist[r] = traces[r].sum_distance[k] / static_cast<double>(N);
      tvb[r] = metrics::tv_coupling_bound(traces[r].merged_fraction[k]);
    }
    const auto a = stats::mean_var(dist);
    const auto b = stats::mean_var(tvb);
    out.est.push_back(a.mean);
    out.se.push_back(R > 1 ? a.mean_stderr : 0.0);
    out.tv_est.push_back(b.mean);
    out.tv_se.push_back(R > 1 ? b.mean_stderr : 0.0);
  }
  return out;
}

particles::LimitFlowResult limit_flow(const Context& ctx, std::size_t M, double T,
                                      std::uint64_t replica) {
  const auto& c = ctx.config;
  particles::LimitFlowOptions lo;
  lo.M = M;
  lo.T = T;
  lo.dt = c.dt;
  lo.picard_iters = c.picard_iters;
  lo.snapshot_dt = c.snapshot_dt;
  lo.mu0 = c.mu0;
  lo.seed = c.seed;
  lo.replica = replica;
  lo.workers = ctx.workers;
  return particles::solve_limit_flow(ctx.model, lo);
}

std::vector<particles::CoupledTrace> coupled_replicas(const Context& ctx,
                                                      const particles::MeasureFlow& flow,
                                                      particles::CoupledRunOptions opt) {
  std::vector<particles::CoupledTrace> traces(ctx.config.replicas);
  parallel_for(traces.size(), ctx.workers, [&](std::size_t r) {
    auto o = opt;
    o.replica = r + 1;  // replica 0 belongs to the limit flow
    traces[r] = particles::simulate_coupled_systems(ctx.model, flow, o);
  });
  return traces;
}

json flow_json(const particles::LimitFlowResult& lf) {
  return {{"M", lf.flow.M}, {"changes", lf.changes}, {"converged", lf.converged}};
}

void run_contraction(Context& ctx) {
  const auto& c = ctx.config;
  const auto& m = ctx.model;
  const bool stable = !m.profile.brownian();
  const std::size_t N = c.N_grid.front();
  std::vector<double> times = c.t_grid;
  std::sort(times.begin(), times.end());
  const double horizon = times.back();
  steps_for(horizon, c.dt);

  double lambda = 0.0, prefactor = 1.0;
  particles::CoupledRunOptions opt;
  if (stable) {
    const auto s = stable_setup(c, m);
    lambda = s.sc.lambda;
    prefactor = s.sc.prefactor;
    opt.coupling = particles::CouplingKind::refined_basic;
    opt.stable = s.spec;
    opt.kappa = s.kappa;
    ctx.report.details["trunc"] = s.spec.trunc;
  } else {
    const auto rc = constants::rate_constants(m);
    lambda = rc.brownian->lambda;
    prefactor = rc.brownian->prefactor;
    opt.coupling = particles::CouplingKind::reflection;
  }
  ctx.report.details["constants"] = constants_json(m, c.eta, c.eta_optimal, c.kappa);
  ctx.add("lambda", 0.0, lambda, 0.0, 0.0, lambda > 0.0);
  ctx.add("prefactor", 0.0, prefactor, 0.0, std::nullopt, true);

  const auto lf = limit_flow(ctx, c.M.value_or(16 * N), horizon, 0);
  ctx.report.details["limit_flow"] = flow_json(lf);

  opt.N = N;
  opt.T = horizon;
  opt.dt = c.dt;
  opt.cutoff = couplings::make_cutoff(c.epsilon, c.merge_radius);
  opt.pairing = c.pairing;
  opt.mu0 = c.mu0;
  opt.seed = c.seed;
  opt.record_times = times;
  const auto st = summarize(coupled_replicas(ctx, lf.flow, opt), N);

  const double w0 = st.est.front();
  const double floor = st.est.back();
  std::vector<double> bound;
  for (std::size_t k = 0; k < st.times.size(); ++k) {
    const double b = prefactor * std::exp(-lambda * st.times[k]) * w0 + floor;
    bound.push_back(b);
    ctx.add("mean_distance", st.times[k], st.est[k], st.se[k], b,
            st.est[k] - 2.0 * st.se[k] <= b);
  }
  for (std::size_t k = 0; k < st.times.size(); ++k) {
    ctx.add("tv_coupling_bound", st.times[k], ctx.tv(st.tv_est[k]), ctx.tv(st.tv_se[k]),
            std::nullopt, true);
  }

  // Pre-plateau segment: t = 0, the first recorded time, then every following
  // time (before the plateau) whose estimate stays above twice the floor.
  std::vector<double> ft{st.times[0]}, fy{st.est[0]};
  for (std::size_t k = 1; k + 1 < st.times.size(); ++k) {
    if (k > 1 && !(st.est[k] > 2.0 * floor)) break;
    ft.push_back(st.times[k]);
    fy.push_back(st.est[k]);
  }
  const auto fit = decay_fit(ft, fy);
  ctx.add("decay_exponent", lambda, fit.exponent, fit.stderr_exponent, 0.5 * lambda,
          fit.exponent >= 0.5 * lambda);
  ctx.report.details["decay_fit"] = {{"points", fit.points}, {"times", ft}};
  ctx.add("limit_flow_change", static_cast<double>(c.picard_iters),
          lf.changes.empty() ? 0.0 : lf.changes.back(), 0.0, 1e-3, lf.converged);

  ctx.report.plots.push_back(PlotSpec{
      stable ? "Refined basic coupling distance" : "Reflection coupling distance", "t",
      "sum |Z_i(t)| / N", false, true,
      {{"estimate", st.times, st.est, false}, {"bound + floor", st.times, bound, true}}});
}

// ---- tv_n_scaling -------------------------------------------------------------

void run_tv_n_scaling(Context& ctx) {
  const auto& c = ctx.config;
  const auto& m = ctx.model;
  const int d = m.dim;
  std::vector<std::size_t> Ns = c.N_grid;
  std::sort(Ns.begin(), Ns.end());
  steps_for(c.T, c.dt);

  std::vector<std::vector<double>> limits;
  json flows = json::array();
  for (std::size_t N : Ns) {
    auto lf = limit_flow(ctx, c.M.value_or(16 * N), c.T, 0);
    flows.push_back(flow_json(lf));
    limits.push_back(std::move(lf.flow.snapshots.back()));
  }
  ctx.report.details["limit_flows"] = flows;

  // One binning for every N, so the histogram bias does not move with N.
  metrics::Binning bins;
  bins.rule = metrics::Binning::Rule::fixed;
  bins.bins = c.bins;
  bins.overflow = true;
  for (int k = 0; k < d; ++k) {
    if (c.range) {
      bins.lo.push_back(c.range->first);
      bins.hi.push_back(c.range->second);
      continue;
    }
    const auto& ref = limits.back();
    std::vector<double> axis;
    for (std::size_t i = k; i < ref.size(); i += d) axis.push_back(ref[i]);
    std::sort(axis.begin(), axis.end());
    bins.lo.push_back(axis[static_cast<std::size_t>(0.005 * (axis.size() - 1))]);
    bins.hi.push_back(axis[static_cast<std::size_t>(0.995 * (axis.size() - 1))]);
  }
  ctx.report.details["bins"] = {{"count", c.bins}, {"lo", bins.lo}, {"hi", bins.hi}};

  std::vector<double> xs, means, ses;
  for (std::size_t k = 0; k < Ns.size(); ++k) {
    const std::size_t N = Ns[k];
    const std::size_t jobs = c.reps * kPooledReplicas;
    std::vector<std::vector<double>> pooled(c.reps,
                                            std::vector<double>(kPooledReplicas * N * d));
    parallel_for(jobs, ctx.workers, [&](std::size_t job) {
      const std::size_t r = job / kPooledReplicas, j = job % kPooledReplicas;
      const auto ens = particles::simulate_particle_system(m, c.mu0, N, c.T, c.dt, c.seed, job);
      std::copy(ens.positions.begin(), ens.positions.end(), pooled[r].begin() + j * N * d);
    });
    std::vector<double> tvs(c.reps);
    for (std::size_t r = 0; r < c.reps; ++r) {
      tvs[r] = ctx.tv(metrics::tv_histogram({pooled[r], d}, {limits[k], d}, bins));
    }
    const auto mv = stats::mean_var(tvs);
    ctx.add("tv_histogram", static_cast<double>(N), mv.mean, mv.mean_stderr, std::nullopt, true);
    xs.push_back(static_cast<double>(N));
    means.push_back(mv.mean);
    ses.push_back(mv.mean_stderr);
  }

  int inversions = 0;
  double worst = 0.0;
  bool within = true;
  for (std::size_t k = 0; k + 1 < means.size(); ++k) {
    const double rise = means[k + 1] - means[k];
    if (rise > 0.0) {
      ++inversions;
      worst = std::max(worst, rise);
      if (rise > 2.0 * std::hypot(ses[k], ses[k + 1])) within = false;
    }
  }
  ctx.add("inversions", static_cast<double>(inversions), worst, 0.0, std::nullopt,
          inversions <= 1 && within);
  const auto fit = metrics::rate_fit(xs, means);
  ctx.add("loglog_slope", -0.25, fit.slope, fit.slope_stderr, -0.25, fit.slope <= -0.25);
  ctx.report.details["fit"] = {
      {"slope", fit.slope}, {"intercept", fit.intercept}, {"slope_stderr", fit.slope_stderr}};

  ctx.report.plots.push_back(PlotSpec{"Histogram total variation to the limit", "N",
                                      "TV(1-marginal, limit)", true, true,
                                      {{"estimate", xs, means, false}}});
}

// ---- coupling_bias_study ------------------------------------------------------

void cf_bias(Context& ctx, double trunc) {
  const auto& c = ctx.config;
  const auto& m = ctx.model;
  const int d = m.dim;
  const double h = c.T;
  const double alpha = m.profile.alpha;
  const std::vector<double> freqs{0.5, 1.0, 2.0};
  const auto gauss = noise::make_stable_spec(alpha, d, trunc, noise::SmallJumpMode::gaussian_approx);
  const auto drop = noise::make_stable_spec(alpha, d, trunc, noise::SmallJumpMode::drop);
  const double moment4 = gauss.normalization * noise::unit_sphere_area(d) *
                         std::pow(trunc, 4.0 - alpha) / (4.0 - alpha);

  for (const auto* spec : {&gauss, &drop}) {
    const bool g = spec == &gauss;
    // Real part of the empirical characteristic function along e_1.
    std::vector<double> cosines(kCfSamples * freqs.size());
    parallel_for(kCfSamples, ctx.workers, [&](std::size_t i) {
      Stream rng(StreamKey{c.seed, StreamRole::generic, static_cast<std::uint64_t>(g) + 1, i});
      noise::JumpBatch jumps;
      noise::sample_jumps(*spec, h, rng, jumps);
      std::vector<double> x = noise::small_jump_compensation(*spec, h, rng);
      for (std::size_t k = 0; k < jumps.size(); ++k) {
        for (int j = 0; j < d; ++j) x[j] += jumps.jump(k)[j];
      }
      for (std::size_t f = 0; f < freqs.size(); ++f) {
        cosines[f * kCfSamples + i] = std::cos(freqs[f] * x[0]);
      }
    });
    double worst = -1.0, worst_se = 0.0, bound = 0.0;
    for (std::size_t f = 0; f < freqs.size(); ++f) {
      const auto mv = stats::mean_var(
          std::span<const double>(cosines).subspan(f * kCfSamples, kCfSamples));
      const double exact = std::exp(-h * std::pow(freqs[f], alpha));
      const double dev = std::abs(mv.mean - exact);
      if (dev > worst) {
        worst = dev;
        worst_se = mv.mean_stderr;
      }
      const double xi2 = freqs[f] * freqs[f];
      // |exp(a) - exp(b)| <= |a - b| for Re a, Re b <= 0, with a - b the
      // missing part of the small-jump exponent.
      const double b = g ? h * xi2 * xi2 / 24.0 * 3.0 / (d * (d + 2.0)) * moment4
                         : 0.5 * xi2 * noise::small_jump_variance(gauss, h);
      bound = std::max(bound, b);
    }
    ctx.add(g ? "cf_bias_gaussian" : "cf_bias_drop", trunc, worst, worst_se, bound,
            worst - 3.0 * worst_se <= bound);
  }
}

void run_coupling_bias_study(Context& ctx) {
  const auto& c = ctx.config;
  const auto& m = ctx.model;
  const bool stable = !m.profile.brownian();
  const std::size_t N = c.N_grid.front();
  std::vector<double> times = c.t_grid;
  std::sort(times.begin(), times.end());
  const double horizon = times.back();
  steps_for(horizon, c.dt);

  particles::CoupledRunOptions opt;
  if (stable) {
    const auto s = stable_setup(c, m);
    opt.coupling = particles::CouplingKind::refined_basic;
    opt.stable = s.spec;
    opt.kappa = s.kappa;
  } else {
    opt.coupling = particles::CouplingKind::reflection;
  }
  const auto lf = limit_flow(ctx, c.M.value_or(16 * N), horizon, 0);
  ctx.report.details["limit_flow"] = flow_json(lf);
  opt.N = N;
  opt.T = horizon;
  opt.dt = c.dt;
  opt.pairing = c.pairing;
  opt.mu0 = c.mu0;
  opt.seed = c.seed;
  opt.record_times = times;

  PlotSpec plot{"Coupled distance by cutoff", "t", "sum |Z_i(t)| / N", false, true, {}};
  for (double eps : c.epsilon_grid) {
    std::optional<double> mr;
    if (c.merge_radius && *c.merge_radius < eps / 2.0) mr = c.merge_radius;
    opt.cutoff = couplings::make_cutoff(eps, mr);
    const auto st = summarize(coupled_replicas(ctx, lf.flow, opt), N);
    const std::string tag = fmt::format("{}", eps);
    for (std::size_t k = 0; k < st.times.size(); ++k) {
      ctx.add("mean_distance[eps=" + tag + "]", st.times[k], st.est[k], st.se[k], std::nullopt,
              std::isfinite(st.est[k]));
      ctx.add("tv_coupling_bound[eps=" + tag + "]", st.times[k], ctx.tv(st.tv_est[k]),
              ctx.tv(st.tv_se[k]), std::nullopt, std::isfinite(st.tv_est[k]));
    }
    plot.series.push_back({"epsilon = " + tag, st.times, st.est, false});
  }
  ctx.report.plots.push_back(std::move(plot));

  if (stable) {
    for (double trunc : c.trunc_grid) cf_bias(ctx, trunc);
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error([&] {
        std::string msg = "invalid configuration:";
        for (const auto& p : problems) msg += "\n  " + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

OuMoments ou_moments(double kappa, double beta, double s, double x0, double T,
                     std::size_t rk_steps) {
  const double h = T / static_cast<double>(rk_steps);
  const double q = beta + s * s;
  auto fm = [&](double m) { return -kappa * m; };
  auto fv = [&](double v) { return -2.0 * kappa * v + q; };
  double m = x0, v = 0.0;
  for (std::size_t i = 0; i < rk_steps; ++i) {
    const double m1 = fm(m), m2 = fm(m + 0.5 * h * m1), m3 = fm(m + 0.5 * h * m2),
                 m4 = fm(m + h * m3);
    const double v1 = fv(v), v2 = fv(v + 0.5 * h * v1), v3 = fv(v + 0.5 * h * v2),
                 v4 = fv(v + h * v3);
    m += h / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
    v += h / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4);
  }
  return {m, v};
}

DecayFit decay_fit(const std::vector<double>& ts, const std::vector<double>& ys) {
  if (ts.size() != ys.size() || ts.size() < 2) {
    throw std::invalid_argument("decay_fit: need at least two matching points");
  }
  const std::size_t n = ts.size();
  std::vector<double> ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(ys[i] > 0.0)) throw std::invalid_argument("decay_fit: values must be positive");
    ly[i] = std::log(ys[i]);
  }
  const double tm = std::accumulate(ts.begin(), ts.end(), 0.0) / n;
  const double ym = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (ts[i] - tm) * (ts[i] - tm);
    sxy += (ts[i] - tm) * (ly[i] - ym);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("decay_fit: times must not coincide");
  const double slope = sxy / sxx;
  DecayFit fit;
  fit.exponent = -slope;
  fit.points = n;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ly[i] - ym - slope * (ts[i] - tm);
      rss += r * r;
    }
    fit.stderr_exponent = std::sqrt(rss / (n - 2) / sxx);
  }
  return fit;
}

json constants_json(const model::ModelSpec& m, std::optional<double> eta, bool eta_optimal,
                    std::optional<double> kappa) {
  const auto& p = m.profile;
  json out = {{"model", m.id()},
              {"profile",
               {{"K1", p.K1},
                {"K2", p.K2},
                {"R", p.R},
                {"K_sigma", p.K_sigma},
                {"K_b", p.K_b},
                {"beta", p.beta},
                {"alpha", p.alpha}}}};
  if (p.brownian()) {
    const auto b = *constants::rate_constants(m).brownian;
    out["brownian"] = {{"f_prime_0", b.f_prime_0},
                       {"slope_at_infinity", b.slope_at_infinity},
                       {"lambda", b.lambda},
                       {"prefactor", b.prefactor},
                       {"gamma_tilde_root", b.gamma_tilde_root},
                       {"admissibility", admissibility_json(b.condition)}};
  } else {
    const double k = kappa.value_or(p.R);
    const double e = eta_optimal ? constants::optimal_eta(p, m.dim, k) : eta.value_or(0.5);
    const auto s = constants::stable_constants(p, m.dim, e, k);
    out["stable"] = {{"eta", s.eta},
                     {"kappa", s.kappa},
                     {"ell0", s.ell0},
                     {"c_dalpha", s.c_dalpha},
                     {"c_tilde", s.c_tilde},
                     {"sigma_eta_coeff", s.sigma_eta_coeff},
                     {"g_eta_2l0", s.g_eta_2l0},
                     {"c1", s.c1},
                     {"psi_prime_0", s.psi_prime_0},
                     {"lambda", s.lambda},
                     {"prefactor", s.prefactor},
                     {"admissibility", admissibility_json(s.condition)}};
  }
  return out;
}

ExperimentReport run(const ExperimentConfig& config, int workers) {
  const auto start = std::chrono::steady_clock::now();
  const auto model = model::make_model(config.model);
  ExperimentReport report;
  report.scenario = scenario_name(config.scenario);
  report.config_hash = config_hash(config.source);
  report.seed = config.seed;
  report.workers = std::max(1, workers);
  Context ctx{config, model, report.workers, report};

  switch (config.scenario) {
    case Scenario::constants_report: run_constants_report(ctx); break;
    case Scenario::lln_rate: run_lln_rate(ctx); break;
    case Scenario::ou_exact: run_ou_exact(ctx); break;
    case Scenario::brownian_contraction:
    case Scenario::stable_contraction: run_contraction(ctx); break;
    case Scenario::tv_n_scaling: run_tv_n_scaling(ctx); break;
    case Scenario::coupling_bias_study: run_coupling_bias_study(ctx); break;
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!config.output.empty()) write_outputs(report, config.output, config.plot);
  return report;
}

ExperimentReport run(const json& config, int workers) {
  auto problems = validate(config);
  if (!problems.empty()) throw ConfigError(std::move(problems));
  auto parsed = parse_config(config);
  return run(*parsed.config, workers);
}

}  // namespace chaosbench::harness
