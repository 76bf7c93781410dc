// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "chaosbench/constants.hpp"
#include "chaosbench/couplings.hpp"
#include "chaosbench/harness.hpp"
#include "chaosbench/integrator.hpp"
#include "chaosbench/noise.hpp"
#include "chaosbench/stats.hpp"

namespace cb = chaosbench;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

json load(const std::string& name) {
  json j = cb::harness::load_json(std::string(CHAOSBENCH_CONFIG_DIR) + "/" + name);
  j.erase("output");
  return j;
}

const cb::harness::ReportRow* find_row(const cb::harness::ExperimentReport& r, const std::string& p) {
  for (const auto& row : r.rows) {
    if (row.parameter == p) return &row;
  }
  return nullptr;
}

std::string describe(const cb::harness::ExperimentReport& r, const std::vector<std::string>& keys) {
  std::size_t ok = 0;
  for (const auto& row : r.rows) ok += row.pass;
  std::string s = fmt::format("{}/{} rows pass", ok, r.rows.size());
  for (const auto& k : keys) {
    if (const auto* row = find_row(r, k)) {
      s += fmt::format("; {} = {:.4g}", k, row->estimate);
      if (row->theory_bound) s += fmt::format(" (bound {:.4g})", *row->theory_bound);
    }
  }
  for (const auto& row : r.rows) {
    if (!row.pass) s += fmt::format("; failed {}[{:.4g}]", row.parameter, row.value);
  }
  return s;
}

Outcome run_scenario(const std::string& config, const std::vector<std::string>& keys) {
  const auto report = cb::harness::run(load(config), 1);
  return {report.all_pass(), describe(report, keys)};
}

// ---- 2: Brownian constants ------------------------------------------------

Outcome constants_closed_forms() {
  cb::model::DissipativityProfile p;
  p.K1 = 0.0;
  p.K2 = 1.7;
  p.R = 0.0;
  p.K_sigma = 0.3;
  p.beta = 0.8;
  const double closed = 2.0 * p.beta / (p.K2 - p.K_sigma);
  // f'(0) = int_0^inf s exp(-(K2 - K_sigma) s^2 / (4 beta)) ds by quadrature.
  boost::math::quadrature::exp_sinh<double> es;
  const double quad = es.integrate(
      [&](double s) { return s * std::exp(-(p.K2 - p.K_sigma) * s * s / (4.0 * p.beta)); }, 0.0,
      std::numeric_limits<double>::infinity(), 1e-12);
  auto near_r0 = p;
  near_r0.R = 1e-8;
  const double lib = cb::constants::f_prime(0.0, p);
  const double lib_q = cb::constants::f_prime(0.0, near_r0);
  double worst = 0.0;
  for (double v : {quad, lib, lib_q}) worst = std::max(worst, std::abs(v / closed - 1.0));
  bool ok = worst < 1e-6;

  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int sign_ok = 0, identity_ok = 0, cbk_ok = 0;
  for (int k = 0; k < 100; ++k) {
    cb::model::DissipativityProfile q;
    q.K2 = 0.5 + 2.5 * u(gen);
    q.K1 = 2.0 * u(gen);
    q.R = 2.0 * u(gen);
    q.K_sigma = 0.5 * q.K2 * u(gen);
    q.K_b = u(gen);
    q.beta = 0.2 + 2.8 * u(gen);
    const double gap = q.K2 - q.K_sigma;
    const double f0 = cb::constants::f_prime(0.0, q);
    const double lambda = cb::constants::lambda_brownian(q);
    const auto adm = cb::constants::check_kbkd(q);
    sign_ok += (lambda > 0.0) == (adm.margin > 0.0);
    const double via_margin = f0 * gap / q.beta * adm.margin;
    identity_ok += std::abs(lambda - via_margin) <= 1e-9 * std::max(1.0, std::abs(lambda));
    cbk_ok += adm.threshold <= gap / 2.0 * (1.0 + 1e-12);
  }
  ok = ok && sign_ok == 100 && identity_ok == 100 && cbk_ok == 100;
  return {ok, fmt::format("f'(0) worst relative error {:.2e}; sign {}/100, identity {}/100, "
                          "threshold <= gap/2 {}/100",
                          worst, sign_ok, identity_ok, cbk_ok)};
}

// ---- 3: overlap mass ------------------------------------------------------

Outcome overlap_mass() {
  double worst = 0.0;
  bool above = true;
  for (double a : {1.1, 1.3, 1.5, 1.7, 1.9}) {
    const double c = cb::noise::stable_normalization(1, a);
    for (double s : {0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0}) {
      const double exact = cb::constants::j_alpha_exact(s, 1, a, c);
      const double closed = 2.0 * c * std::pow(s / 2.0, -a) / a;
      worst = std::max(worst, std::abs(exact / closed - 1.0));
      above = above && exact >= cb::constants::j_alpha_lower(s, 1, a, c);
    }
  }
  return {worst < 1e-4 && above,
          fmt::format("worst relative error {:.2e}; exact >= lower bound: {}", worst, above)};
}

// ---- 8: marginal preservation ---------------------------------------------

constexpr std::size_t kMarginalSamples = 100000;

cb::Stream check_stream(std::uint64_t test, std::uint64_t which, std::size_t i) {
  return cb::Stream(cb::StreamKey{8, cb::StreamRole::marginal_check, test * 2 + which, i});
}

struct KsPair {
  double p_limit = 1.0;
  double p_particle = 1.0;
};

// coupled(i, pair) advances one pair; single(i, member, x) advances one
// member alone on an independent stream. Compares coordinate `coord`.
KsPair marginal_ks(std::uint64_t test, const std::vector<double>& xl, const std::vector<double>& xp,
                   const std::function<void(cb::couplings::CoupledPair&, cb::Stream&)>& coupled,
                   const std::function<void(int, std::vector<double>&, cb::Stream&)>& single,
                   int coord) {
  std::vector<double> cl(kMarginalSamples), cp(kMarginalSamples), rl(kMarginalSamples),
      rp(kMarginalSamples);
  for (std::size_t i = 0; i < kMarginalSamples; ++i) {
    auto pair = cb::couplings::make_pair(xl, xp);
    auto s = check_stream(test, 0, i);
    coupled(pair, s);
    cl[i] = pair.x_limit[coord];
    cp[i] = pair.x_particle[coord];
    auto a = xl, b = xp;
    auto s1 = check_stream(test, 1, i);
    single(0, a, s1);
    auto s2 = check_stream(test, 1, kMarginalSamples + i);
    single(1, b, s2);
    rl[i] = a[coord];
    rp[i] = b[coord];
  }
  return {cb::stats::ks_two_sample(cl, rl).p_value, cb::stats::ks_two_sample(cp, rp).p_value};
}

Outcome coupling_validity() {
  cb::model::ModelRequest req;
  req.b0 = {"cubic", {}};
  const auto brownian1 = cb::model::make_model(req);
  req.dim = 2;
  req.b0 = {"radial-cubic", {}};
  const auto brownian2 = cb::model::make_model(req);
  req.dim = 1;
  req.b0 = {"cubic", {}};
  req.alpha = 1.5;
  req.R = 0.5;
  const auto stable1 = cb::model::make_model(req);

  const double dt = 0.01;
  const cb::couplings::StepContext ctx{0.0, dt, 0};
  std::vector<std::string> lines;
  double worst = 1.0;
  auto record = [&](const std::string& name, const KsPair& k) {
    worst = std::min({worst, k.p_limit, k.p_particle});
    lines.push_back(fmt::format("{} p = {:.3g}/{:.3g}", name, k.p_limit, k.p_particle));
  };
  auto uncoupled = [&](const cb::model::ModelSpec& m, const std::vector<double>& mf_l,
                       const std::vector<double>& mf_p) {
    return [&m, mf_l, mf_p, ctx](int member, std::vector<double>& x, cb::Stream& s) {
      cb::integrator::uncoupled_step(m, x, member == 0 ? mf_l : mf_p, ctx, s);
    };
  };

  // Reflection, full zone and interpolation zone, d = 1 and d = 2.
  {
    const auto cutoff = cb::couplings::make_cutoff(0.2);
    const std::vector<double> mfl{0.3}, mfp{-0.2};
    for (double sep : {1.0, 0.15}) {
      record(fmt::format("reflection |x|={}", sep),
             marginal_ks(
                 sep == 1.0 ? 1 : 2, {0.4}, {0.4 - sep},
                 [&](auto& pair, auto& s) {
                   cb::couplings::reflection_step(pair, brownian1, mfl, mfp, ctx, cutoff, s);
                 },
                 uncoupled(brownian1, mfl, mfp), 0));
    }
    const std::vector<double> mfl2{0.3, 0.0}, mfp2{0.0, -0.2};
    for (int coord : {0, 1}) {
      record(fmt::format("reflection d=2 coord {}", coord),
             marginal_ks(
                 3 + coord, {0.5, 0.2}, {-0.1, 0.6},
                 [&](auto& pair, auto& s) {
                   cb::couplings::reflection_step(pair, brownian2, mfl2, mfp2, ctx, cutoff, s);
                 },
                 uncoupled(brownian2, mfl2, mfp2), coord));
    }
  }
  // Refined basic against the jump-resolved single step.
  {
    const auto spec = cb::noise::make_stable_spec(1.5, 1, 0.1);
    const auto cutoff = cb::couplings::make_cutoff(0.05);
    const std::vector<double> mfl{0.1}, mfp{-0.1};
    record("refined basic",
           marginal_ks(
               5, {0.5}, {0.0},
               [&](auto& pair, auto& s) {
                 cb::couplings::refined_basic_step(pair, stable1, mfl, mfp, ctx, cutoff, {1.0}, spec, s);
               },
               [&](int member, std::vector<double>& x, cb::Stream& s) {
                 cb::integrator::jump_resolved_step(stable1, x, member == 0 ? mfl : mfp, ctx, spec, s);
               },
               0));
  }
  // Synchronous, Brownian and stable.
  {
    const std::vector<double> mfl{0.3}, mfp{-0.2};
    record("synchronous brownian",
           marginal_ks(
               6, {0.4}, {-0.6},
               [&](auto& pair, auto& s) {
                 cb::couplings::synchronous_step(pair, brownian1, mfl, mfp, ctx, s);
               },
               uncoupled(brownian1, mfl, mfp), 0));
    record("synchronous stable",
           marginal_ks(
               7, {0.4}, {-0.6},
               [&](auto& pair, auto& s) {
                 cb::couplings::synchronous_step(pair, stable1, mfl, mfp, ctx, s);
               },
               uncoupled(stable1, mfl, mfp), 0));
  }
  std::string detail = fmt::format("min p = {:.3g}", worst);
  for (const auto& l : lines) detail += "; " + l;
  return {worst > 1e-3, detail};
}

// ---- 9: determinism -------------------------------------------------------

Outcome determinism() {
  std::vector<json> configs;
  auto b = load("brownian_contraction.json");
  b["N_grid"] = {64};
  b["t_grid"] = {0.5, 1, 2};
  b["replicas"] = 3;
  configs.push_back(b);
  auto s = load("stable_contraction.json");
  s["N_grid"] = {32};
  s["M"] = 256;
  s["t_grid"] = {0.5, 1, 2};
  s["replicas"] = 3;
  configs.push_back(s);
  auto l = load("lln_rate.json");
  l["reps"] = 300;
  configs.push_back(l);
  auto t = load("tv_n_scaling.json");
  t["N_grid"] = {64, 128, 256, 512};
  t["reps"] = 2;
  configs.push_back(t);
  auto o = load("ou_exact.json");
  o["replicas"] = 5000;
  configs.push_back(o);

  std::vector<std::string> names;
  bool all = true;
  for (const auto& c : configs) {
    const auto one = cb::harness::to_csv(cb::harness::run(c, 1));
    const bool same = one == cb::harness::to_csv(cb::harness::run(c, 1)) &&
                      one == cb::harness::to_csv(cb::harness::run(c, 8));
    all = all && same;
    names.push_back(fmt::format("{} {}", c["scenario"].get<std::string>(), same ? "identical" : "DIFFERS"));
  }
  std::string detail;
  for (const auto& n : names) detail += (detail.empty() ? "" : "; ") + n;
  return {all, detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> body;
  };
  const std::vector<Criterion> criteria{
      {1, "LLN rate", 120, [] { return run_scenario("lln_rate.json", {"loglog_slope"}); }},
      {2, "Brownian constants", 10, constants_closed_forms},
      {3, "overlap mass", 10, overlap_mass},
      {4, "OU exactness", 180,
       [] { return run_scenario("ou_exact.json", {"mean", "variance", "tv_histogram"}); }},
      {5, "Brownian contraction", 300,
       [] { return run_scenario("brownian_contraction.json", {"lambda", "decay_exponent"}); }},
      {6, "stable contraction", 600,
       [] { return run_scenario("stable_contraction.json", {"lambda", "decay_exponent"}); }},
      {7, "TV N-scaling", 600,
       [] { return run_scenario("tv_n_scaling.json", {"inversions", "loglog_slope"}); }},
      {8, "coupling validity", 180, coupling_validity},
      {9, "determinism", 60, determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.body();
    } catch (const std::exception& e) {
      out = {false, fmt::format("exception: {}", e.what())};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_seconds;
    const bool pass = out.pass && in_time;
    failed += !pass;
    fmt::print("criterion {} {}: {} ({:.1f} s of {:.0f} s{}) {}\n", c.id, c.name,
               pass ? "PASS" : "FAIL", secs, c.budget_seconds, in_time ? "" : ", over budget",
               out.detail);
    std::fflush(stdout);
  }
  return failed;
}
