#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "chaosbench/constants.hpp"
#include "chaosbench/noise.hpp"

using namespace chaosbench;
using namespace chaosbench::constants;
using model::DissipativityProfile;
using boost::math::quadrature::exp_sinh;
using boost::math::quadrature::gauss_kronrod;

namespace {

DissipativityProfile brownian(double K1, double K2, double R, double Ks, double Kb, double beta) {
  DissipativityProfile p;
  p.K1 = K1;
  p.K2 = K2;
  p.R = R;
  p.K_sigma = Ks;
  p.K_b = Kb;
  p.beta = beta;
  return p;
}

DissipativityProfile stable(double K1, double K2, double l0, double Kb, double alpha) {
  DissipativityProfile p;
  p.K1 = K1;
  p.K2 = K2;
  p.R = l0;
  p.K_b = Kb;
  p.alpha = alpha;
  return p;
}

// G by direct quadrature of gamma_tilde, with the breakpoints as knots.
double G_quad(double s, const DissipativityProfile& p) {
  auto gt = [&](double v) { return gamma_tilde(v, p); };
  double total = 0.0, a = 0.0;
  for (double knot : {p.R, 2.0 * p.R, s}) {
    const double b = std::min(knot, s);
    if (b > a) total += gauss_kronrod<double, 61>::integrate(gt, a, b, 10, 1e-14);
    a = std::max(a, b);
  }
  return total;
}

// f'(r) straight from its defining integral.
double f_prime_quad(double r, const DissipativityProfile& p) {
  const double Gr = G_quad(r, p);
  exp_sinh<double> es;
  return es.integrate(
      [&](double u) {
        const double s = r + u;
        return s * std::exp((G_quad(s, p) - Gr) / (2.0 * p.beta));
      },
      0.0, std::numeric_limits<double>::infinity(), 1e-12);
}

DissipativityProfile random_profile(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double K2 = 0.5 + 2.5 * u(gen);
  return brownian(2.0 * u(gen), K2, 2.0 * u(gen), 0.5 * K2 * u(gen), u(gen), 0.2 + 2.8 * u(gen));
}

}  // namespace

TEST_SUITE("constants") {
  TEST_CASE("gamma_tilde and its integral") {
    const auto p = brownian(1.0, 2.0, 0.5, 0.25, 0.0, 1.0);
    CHECK(gamma_tilde(0.3, p) == doctest::Approx(1.0 * 0.3 + 0.25 * 0.3));
    CHECK(gamma_tilde(3.0, p) == doctest::Approx(-2.0 * 3.0 + 0.25 * 3.0));
    const double root = gamma_tilde_root(p);
    CHECK(root == doctest::Approx((1.0 + 1.25 / 3.0) * 0.5));
    CHECK(std::abs(gamma_tilde(root, p)) < 1e-12);
    for (double s : {0.0, 0.2, 0.5, 0.7, 1.0, 1.6, 4.0}) {
      CHECK(gamma_tilde_integral(s, p) == doctest::Approx(G_quad(s, p)).epsilon(1e-12));
    }
  }

  TEST_CASE("f' in the purely dissipative case is the constant 2 beta / gap") {
    const auto p = brownian(0.0, 1.7, 0.0, 0.2, 0.0, 0.8);
    for (double r : {0.0, 0.5, 3.0}) {
      CHECK(f_prime(r, p) == doctest::Approx(2.0 * 0.8 / 1.5).epsilon(1e-12));
    }
    CHECK(f_slope_at_infinity(p) == doctest::Approx(2.0 * 0.8 / 1.5));
  }

  TEST_CASE("f' against its defining integral") {
    for (const auto& p : {brownian(1.0, 2.0, 0.5, 0.0, 0.0, 1.0), brownian(0.3, 1.0, 1.5, 0.2, 0.0, 0.5),
                          brownian(2.0, 3.0, 0.2, 1.0, 0.0, 2.0)}) {
      for (double r : {0.0, 0.1, 0.6, 1.5, 4.0}) {
        CHECK(f_prime(r, p) == doctest::Approx(f_prime_quad(r, p)).epsilon(1e-8));
      }
    }
  }

  TEST_CASE("f' is positive, non-increasing and tends to 2 beta / gap") {
    std::mt19937_64 gen(1);
    for (int k = 0; k < 20; ++k) {
      const auto p = random_profile(gen);
      double prev = f_prime(0.0, p);
      for (int i = 1; i <= 60; ++i) {
        const double v = f_prime(0.1 * i, p);
        REQUIRE(v > 0.0);
        REQUIRE(v <= prev * (1.0 + 1e-12));
        prev = v;
      }
      CHECK(f_prime(50.0, p) == doctest::Approx(f_slope_at_infinity(p)).epsilon(1e-6));
    }
  }

  TEST_CASE("f is zero at zero, concave and squeezed between its linear bounds") {
    const auto p = brownian(1.0, 2.0, 0.8, 0.1, 0.0, 0.7);
    CHECK(f_value(0.0, p) == 0.0);
    const double f0 = f_prime(0.0, p), finf = f_slope_at_infinity(p);
    for (int i = 1; i <= 40; ++i) {
      const double r = 0.1 * i;
      const double f = f_value(r, p);
      CHECK(f >= finf * r * (1.0 - 1e-12));
      CHECK(f <= f0 * r * (1.0 + 1e-12));
      const double mid = f_value(r - 0.05, p);
      CHECK(mid >= 0.5 * (f_value(r - 0.1, p) + f) - 1e-12);
    }
  }

  TEST_CASE("lambda and the admissibility threshold on random profiles") {
    std::mt19937_64 gen(2);
    for (int k = 0; k < 100; ++k) {
      const auto p = random_profile(gen);
      const double gap = p.K2 - p.K_sigma;
      const double f0 = f_prime(0.0, p);
      const double lambda = lambda_brownian(p);
      const auto adm = check_kbkd(p);
      CHECK(lambda == doctest::Approx(2.0 * p.beta / f0 - f0 * gap * p.K_b / p.beta).epsilon(1e-12));
      CHECK((lambda > 0.0) == adm.holds);
      CHECK(lambda == doctest::Approx(f0 * gap / p.beta * adm.margin).epsilon(1e-9));
      CHECK(adm.threshold <= gap / 2.0 * (1.0 + 1e-12));
    }
  }

  TEST_CASE("lambda with no interaction, at the threshold, and without dissipation") {
    auto p = brownian(1.0, 2.0, 0.5, 0.0, 0.0, 1.0);
    CHECK(lambda_brownian(p) == doctest::Approx(2.0 / f_prime(0.0, p)));
    p.K_b = check_kbkd(p).threshold;
    CHECK(std::abs(lambda_brownian(p)) < 1e-12);
    p.K_sigma = 2.0;
    CHECK_THROWS_AS(f_prime(0.0, p), std::domain_error);
  }

  TEST_CASE("quadrature tolerance is self-consistent") {
    const auto p = brownian(1.5, 2.0, 1.0, 0.3, 0.0, 0.4);
    for (double r : {0.0, 0.7, 2.5}) {
      CHECK(f_prime(r, p, 1e-12) == doctest::Approx(f_prime(r, p, 1e-10)).epsilon(1e-8));
    }
  }

  TEST_CASE("overlap mass J in d = 1 has the closed form c 2^{1+a} s^{-a} / a") {
    for (double a : {1.1, 1.3, 1.5, 1.7, 1.9}) {
      const double c = noise::stable_normalization(1, a);
      for (double s = 0.01; s <= 1.0; s *= 1.5) {
        const double closed = c * std::pow(2.0, 1.0 + a) * std::pow(s, -a) / a;
        CHECK(j_alpha_exact(s, 1, a, c) == doctest::Approx(closed).epsilon(1e-8));
        CHECK(j_alpha_exact(s, 1, a, c) >= j_alpha_lower(s, 1, a, c));
      }
    }
  }

  TEST_CASE("overlap mass: lower bound, scaling and monotonicity in d = 1, 2") {
    for (int d : {1, 2}) {
      const double a = 1.5;
      const double c = noise::stable_normalization(d, a);
      CHECK(c_tilde(d, a, c) ==
            doctest::Approx(c * std::pow(2.0 / 3.0, d + a) * std::pow(2.0, -d) * noise::unit_ball_volume(d)));
      double prev = std::numeric_limits<double>::infinity();
      for (double s : {0.05, 0.1, 0.3, 0.8, 2.0}) {
        const double j = j_alpha_exact(s, d, a, c);
        CHECK(j >= j_alpha_lower(s, d, a, c));
        CHECK(j < prev);
        CHECK(j_alpha_exact(2.0 * s, d, a, c) == doctest::Approx(std::pow(2.0, -a) * j).epsilon(1e-7));
        prev = j;
      }
    }
    CHECK_THROWS_AS(j_alpha_exact(0.0, 1, 1.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(j_alpha_lower(-1.0, 1, 1.5, 1.0), std::invalid_argument);
  }

  TEST_CASE("stable constants follow their defining formulas") {
    const auto p = stable(0.5, 1.0, 0.4, 0.01, 1.5);
    const double eta = 0.4, kappa = 0.3;
    const auto sc = stable_constants(p, 1, eta, kappa);
    const double c = noise::stable_normalization(1, 1.5);
    CHECK(sc.c_dalpha == doctest::Approx(c));
    const double two_l0 = 0.8;
    CHECK(sc.sigma_eta_coeff * std::pow(two_l0, eta) ==
          doctest::Approx(sc.c_tilde * std::pow(std::min(kappa, two_l0), 0.5) / (2.0 * two_l0)));
    // sigma_eta(2 l0) is dominated by the overlap mass bound (1/2r) J(k ^ r) (k ^ r)^2.
    const double kr = std::min(kappa, two_l0);
    CHECK(sc.sigma_eta_coeff * std::pow(two_l0, eta) <=
          j_alpha_exact(kr, 1, 1.5, c) * kr * kr / (2.0 * two_l0));
    const double g = 1.5 * std::pow(two_l0, 1.0 - eta) / ((1.0 - eta) * sc.sigma_eta_coeff);
    CHECK(sc.g_eta_2l0 == doctest::Approx(g));
    CHECK(g_eta(two_l0, sc) == doctest::Approx(g));
    CHECK(sc.c1 == doctest::Approx(std::exp(-2.0 * 1.0 * g)));
    CHECK(sc.psi_prime_0 == doctest::Approx(1.0 + sc.c1));
    CHECK(sc.lambda == doctest::Approx(2.0 * sc.c1 / (1.0 + sc.c1) - 0.01 * (1.0 + sc.c1) / sc.c1));
    CHECK(sc.prefactor == doctest::Approx((1.0 + sc.c1) / (2.0 * sc.c1)));
  }

  TEST_CASE("psi: quadrature, slopes, concavity and linear bounds") {
    const auto p = stable(0.5, 1.0, 0.2, 0.0, 1.6);
    const auto sc = stable_constants(p, 1, 0.5, 0.2);
    CHECK(psi(0.0, sc) == 0.0);
    CHECK(psi_prime(0.0, sc) == doctest::Approx(1.0 + sc.c1));
    CHECK(psi_prime(0.4 * (1.0 - 1e-12), sc) == doctest::Approx(2.0 * sc.c1).epsilon(1e-9));
    auto integrand = [&](double s) { return sc.c1 + std::exp(-2.0 * sc.K2 * g_eta(s, sc)); };
    for (double r : {0.01, 0.1, 0.25, 0.4}) {
      const double q = gauss_kronrod<double, 61>::integrate(integrand, 0.0, r, 15, 1e-13);
      CHECK(psi(r, sc) == doctest::Approx(q).epsilon(1e-9));
    }
    CHECK(psi(1.0, sc) == doctest::Approx(psi(0.4, sc) + 2.0 * sc.c1 * 0.6));
    for (int i = 1; i <= 100; ++i) {
      const double r = 0.01 * i;
      CHECK(psi_second(r, sc) <= 0.0);
      CHECK(psi(r, sc) >= 2.0 * sc.c1 * r * (1.0 - 1e-12));
      CHECK(psi(r, sc) <= (1.0 + sc.c1) * r * (1.0 + 1e-12));
    }
  }

  TEST_CASE("stable lambda: no interaction, sign equivalence, optimal eta") {
    auto p = stable(0.2, 0.8, 0.05, 0.0, 1.5);
    auto sc = stable_constants(p, 1, 0.5, 0.05);
    CHECK(sc.lambda == doctest::Approx(2.0 * sc.c1 * 0.8 / (1.0 + sc.c1)));
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
      p = stable(u(gen), 0.2 + u(gen), 0.01 + 0.1 * u(gen), 0.05 * u(gen), 1.1 + 0.8 * u(gen));
      const double eta = 0.05 + 0.9 * u(gen);
      sc = stable_constants(p, 1 + k % 2, eta, p.R);
      CHECK((sc.lambda > 0.0) == sc.condition.holds);
    }
    p = stable(0.3, 1.0, 0.05, 0.001, 1.5);
    const double best = optimal_eta(p, 1, 0.05);
    const double lbest = stable_constants(p, 1, best, 0.05).lambda;
    for (double eta : {0.05, 0.2, 0.5, 0.8, 0.95}) {
      CHECK(lbest >= stable_constants(p, 1, eta, 0.05).lambda - 1e-12);
    }
  }

  TEST_CASE("stable constants reject invalid inputs") {
    const auto p = stable(0.2, 1.0, 0.1, 0.0, 1.5);
    CHECK_THROWS_AS(stable_constants(p, 1, 1.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(stable_constants(p, 1, 0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(stable_constants(stable(0.2, 1.0, 0.0, 0.0, 1.5), 1, 0.5, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(stable_constants(stable(0.2, 1.0, 0.1, 0.0, 2.0), 1, 0.5, 0.1), std::invalid_argument);
  }
}
