#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "chaosbench/couplings.hpp"
#include "chaosbench/errors.hpp"
#include "chaosbench/model.hpp"
#include "chaosbench/noise.hpp"
#include "chaosbench/stats.hpp"

using namespace chaosbench;
using couplings::CoupledPair;
using V = std::vector<double>;

namespace {

model::ModelSpec linear(double kappa, double beta = 1.0, double alpha = 2.0, int dim = 1) {
  model::ModelRequest r;
  r.dim = dim;
  r.beta = beta;
  r.alpha = alpha;
  r.b0 = {"linear", {{"kappa", kappa}}};
  if (alpha < 2.0) r.R = 0.5;
  return model::make_model(r);
}

Stream stream(std::uint64_t replica, std::uint64_t particle = 0) {
  return Stream(StreamKey{77, StreamRole::generic, replica, particle});
}

}  // namespace

TEST_SUITE("couplings") {
  TEST_CASE("cutoff functions") {
    const auto c = couplings::make_cutoff(0.2);
    CHECK(c.merge_radius == doctest::Approx(0.05));
    CHECK(couplings::pi_R(0.2, c) == 1.0);
    CHECK(couplings::pi_R(5.0, c) == 1.0);
    CHECK(couplings::pi_R(0.1, c) == 0.0);
    CHECK(couplings::pi_R(0.0, c) == 0.0);
    CHECK(couplings::pi_R(0.15, c) == doctest::Approx(0.5));
    for (int k = 0; k <= 100; ++k) {
      const double r = 0.3 * k / 100.0;
      const double a = couplings::pi_R(r, c), b = couplings::pi_S(r, c);
      REQUIRE(a * a + b * b == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK_THROWS_AS(couplings::make_cutoff(0.0), std::invalid_argument);
    CHECK_THROWS_AS(couplings::make_cutoff(0.1, 0.05), std::invalid_argument);
    CHECK_THROWS_AS(couplings::make_cutoff(0.1, -0.01), std::invalid_argument);
    CHECK(couplings::make_cutoff(0.1, 0.0).merge_radius == 0.0);
  }

  TEST_CASE("kappa truncation") {
    const couplings::KappaSpec k{2.0};
    CHECK(couplings::truncate_kappa(V{0.0, 0.0}, k) == V{0.0, 0.0});
    CHECK(couplings::truncate_kappa(V{0.6, 0.8}, k) == V{0.6, 0.8});
    const auto t = couplings::truncate_kappa(V{2.4, 3.2}, k);
    CHECK(t[0] == doctest::Approx(1.2));
    CHECK(t[1] == doctest::Approx(1.6));
  }

  TEST_CASE("merge rule: pending, confirmation, reset, absorption") {
    const auto c = couplings::make_cutoff(0.4);  // merge radius 0.1
    auto p = couplings::make_pair(V{0.0}, V{0.05});
    couplings::update_merge(p, c, 1.0);
    CHECK(p.pending);
    CHECK_FALSE(p.merged);
    p.x_particle = V{0.5};
    couplings::update_merge(p, c, 1.1);
    CHECK_FALSE(p.pending);
    p.x_particle = V{0.02};
    couplings::update_merge(p, c, 1.2);
    couplings::update_merge(p, c, 1.3);
    CHECK(p.merged);
    REQUIRE(p.merge_time.has_value());
    CHECK(*p.merge_time == doctest::Approx(1.2));
    p.x_particle = V{3.0};
    couplings::update_merge(p, c, 1.4);
    CHECK(p.merged);
  }

  TEST_CASE("a merged pair with equal drifts never separates") {
    const auto m = linear(1.0);
    const auto c = couplings::make_cutoff(0.1);
    auto p = couplings::make_pair(V{0.3}, V{0.3});
    p.merged = true;
    Stream s = stream(1);
    for (std::uint64_t k = 0; k < 1000; ++k) {
      couplings::reflection_step(p, m, V{0.0}, V{0.0}, {k * 1e-2, 1e-2, k}, c, s);
      REQUIRE(p.x_limit == p.x_particle);
    }
  }

  TEST_CASE("full reflection in d = 1 cancels the noise of the sum") {
    const auto m = linear(0.7, 2.0);
    const auto c = couplings::make_cutoff(0.01);
    auto p = couplings::make_pair(V{1.0}, V{-0.5});
    Stream s = stream(2);
    const double dt = 0.01;
    const double sum0 = 0.5;
    couplings::reflection_step(p, m, V{0.1}, V{-0.2}, {0.0, dt, 0}, c, s);
    const double expect = sum0 + (-0.7 * 1.0 + 0.1 - 0.7 * -0.5 - 0.2) * dt;
    CHECK(p.x_limit[0] + p.x_particle[0] == doctest::Approx(expect).epsilon(1e-13));
  }

  TEST_CASE("synchronous coupling moves the difference by drift only") {
    for (double alpha : {2.0, 1.5}) {
      const auto m = linear(2.0, 1.0, alpha, 2);
      auto p = couplings::make_pair(V{1.0, -1.0}, V{0.5, 0.0});
      Stream s = stream(3);
      const double dt = 1e-3;
      for (std::uint64_t k = 0; k < 1000; ++k) {
        couplings::synchronous_step(p, m, V{0.0, 0.0}, V{0.0, 0.0}, {k * dt, dt, k}, s);
      }
      const double decay = std::pow(1.0 - 2.0 * dt, 1000);
      CHECK(p.x_limit[0] - p.x_particle[0] == doctest::Approx(0.5 * decay).epsilon(1e-10));
      CHECK(p.x_limit[1] - p.x_particle[1] == doctest::Approx(-decay).epsilon(1e-10));
      CHECK(decay == doctest::Approx(std::exp(-2.0)).epsilon(3e-3));
    }
  }

  TEST_CASE("reflection coupling of OU: E|Z_t| against the absorbed 1-d oracle") {
    // For d|Z| = -kappa |Z| dt + 2 sqrt(beta) dW absorbed at 0, e^{kappa t} Z is
    // a stopped martingale, so E|Z_t| = |Z_0| e^{-kappa t}.
    const auto m = linear(1.0);
    const auto c = couplings::make_cutoff(0.1);
    const double dt = 1e-3;
    std::vector<double> z(20000);
    for (std::size_t i = 0; i < z.size(); ++i) {
      auto p = couplings::make_pair(V{0.5}, V{-0.5});
      Stream s = stream(4, i);
      for (std::uint64_t k = 0; k < 1000; ++k) {
        couplings::reflection_step(p, m, V{0.0}, V{0.0}, {k * dt, dt, k}, c, s);
      }
      z[i] = p.distance();
    }
    const auto mv = stats::mean_var(z);
    CHECK(std::abs(mv.mean - std::exp(-1.0)) < 3.0 * mv.mean_stderr + 0.02);
  }

  TEST_CASE("refined basic coupling with zero separation keeps the pair together") {
    const auto m = linear(1.0, 1.0, 1.5);
    const auto spec = noise::make_stable_spec(1.5, 1, 0.05);
    const auto c = couplings::make_cutoff(0.01);
    auto p = couplings::make_pair(V{0.2}, V{0.2});
    Stream s = stream(5);
    for (std::uint64_t k = 0; k < 2000; ++k) {
      couplings::refined_basic_step(p, m, V{0.0}, V{0.0}, {k * 0.01, 0.01, k}, c, {1.0}, spec, s);
      REQUIRE(p.x_limit == p.x_particle);
    }
  }

  TEST_CASE("an accepted first-branch jump closes a separation below kappa") {
    const auto m = linear(1e-9, 1.0, 1.5);
    const auto spec = noise::make_stable_spec(1.5, 1, 0.02);
    const auto c = couplings::make_cutoff(0.01);
    const double dt = 1e-3;
    int closed = 0, doubled = 0;
    for (std::size_t i = 0; i < 20000; ++i) {
      auto p = couplings::make_pair(V{0.5}, V{0.0});
      Stream s = stream(6, i);
      couplings::BranchTally tally;
      couplings::refined_basic_step(p, m, V{0.0}, V{0.0}, {0.0, dt, 0}, c, {1.0}, spec, s, &tally);
      if (tally.jumps != 1) continue;
      const double diff = p.x_limit[0] - p.x_particle[0];
      if (tally.branch_plus == 1) {
        CHECK(std::abs(diff) < 1e-9);
        ++closed;
      } else if (tally.branch_minus == 1) {
        CHECK(diff == doctest::Approx(1.0).epsilon(1e-8));
        ++doubled;
      } else {
        CHECK(diff == doctest::Approx(0.5).epsilon(1e-8));
      }
    }
    CHECK(closed > 0);
    CHECK(doubled > 0);
  }

  TEST_CASE("thinning frequencies match the quadrature oracle and the chi-square test") {
    // d = 1, xbar = 0.5 <= kappa, trunc = 0.02, pi_R = 1. Per jump, branch one
    // has probability (1/2) int_{|z|>tr} rho(-xbar, z) nu(dz) / nu(|z| > tr);
    // splitting at z = -xbar/2 gives the closed form
    // (1/4) [2 (xbar/2)^{-a} - (xbar - tr)^{-a} + (xbar + tr)^{-a}] tr^{a}.
    const double a = 1.5, tr = 0.02, xb = 0.5;
    const double p_oracle = 0.25 *
                            (2.0 * std::pow(xb / 2.0, -a) - std::pow(xb - tr, -a) +
                             std::pow(xb + tr, -a)) *
                            std::pow(tr, a);
    const auto m = linear(1e-9, 1.0, a);
    const auto spec = noise::make_stable_spec(a, 1, tr);
    const auto c = couplings::make_cutoff(0.01);
    couplings::BranchTally total;
    for (std::size_t i = 0; i < 200000; ++i) {
      auto p = couplings::make_pair(V{xb}, V{0.0});
      Stream s = stream(7, i);
      couplings::BranchTally t;
      couplings::refined_basic_step(p, m, V{0.0}, V{0.0}, {0.0, 1e-4, 0}, c, {1.0}, spec, s, &t);
      if (t.jumps != 1) continue;
      total.jumps += 1;
      total.branch_plus += t.branch_plus;
      total.branch_minus += t.branch_minus;
      total.expected_plus += t.expected_plus;
      total.expected_minus += t.expected_minus;
    }
    REQUIRE(total.jumps > 1000);
    const double n = static_cast<double>(total.jumps);
    // Branch probabilities lie in [0, 1/2], so their variance is at most p / 2.
    const double sd_expected = std::sqrt(0.5 * p_oracle / n);
    CHECK(std::abs(total.expected_plus / n - p_oracle) < 4.0 * sd_expected);
    CHECK(std::abs(total.expected_minus / n - p_oracle) < 4.0 * sd_expected);
    const double sd = std::sqrt(p_oracle * (1.0 - p_oracle) / n);
    CHECK(std::abs(total.branch_plus / n - p_oracle) < 4.0 * sd);

    const double e_plus = total.expected_plus, e_minus = total.expected_minus;
    const double e_none = n - e_plus - e_minus;
    const double o_none = n - total.branch_plus - total.branch_minus;
    const double chi2 = std::pow(total.branch_plus - e_plus, 2) / e_plus +
                        std::pow(total.branch_minus - e_minus, 2) / e_minus +
                        std::pow(o_none - e_none, 2) / e_none;
    CHECK(stats::chi_square_sf(chi2, 2.0) > 1e-3);
  }

  TEST_CASE("non-finite states raise a fault naming the step") {
    model::ModelRequest r;
    r.b0 = {"cubic", {}};
    const auto m = model::make_model(r);
    auto p = couplings::make_pair(V{1e120}, V{-1e120});
    Stream s = stream(8);
    try {
      couplings::synchronous_step(p, m, V{0.0}, V{0.0}, {0.0, 0.1, 42}, s);
      FAIL("expected a NumericalFault");
    } catch (const NumericalFault& e) {
      CHECK(e.step() == 42);
    }
  }

  TEST_CASE("coupling kinds reject the wrong noise") {
    const auto brownian = linear(1.0);
    const auto spec = noise::make_stable_spec(1.5, 1, 0.1);
    auto p = couplings::make_pair(V{0.0}, V{1.0});
    Stream s = stream(9);
    CHECK_THROWS_AS(couplings::refined_basic_step(p, brownian, V{0.0}, V{0.0}, {0.0, 0.01, 0},
                                                  couplings::make_cutoff(0.1), {1.0}, spec, s),
                    std::invalid_argument);
    CHECK_THROWS_AS(couplings::reflection_step(p, linear(1.0, 1.0, 1.5), V{0.0}, V{0.0},
                                               {0.0, 0.01, 0}, couplings::make_cutoff(0.1), s),
                    std::invalid_argument);
  }
}
