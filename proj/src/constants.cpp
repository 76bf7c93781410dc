#include "chaosbench/constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/minima.hpp>

#include "chaosbench/noise.hpp"

namespace chaosbench::constants {
namespace {

using boost::math::quadrature::exp_sinh;
using boost::math::quadrature::gauss_kronrod;
using Profile = model::DissipativityProfile;

double dissipative_gap(const Profile& p) {
  const double gap = p.K2 - p.K_sigma;
  if (!(gap > 0.0)) {
    throw std::domain_error("f_prime: K2 <= K_sigma, the defining integral diverges");
  }
  return gap;
}

// Boost compares an error estimate on the reference interval with a
// tolerance scaled by the interval length, so on short intervals a tight
// relative tolerance is never met and the recursion runs to max depth.
// Integrating over [0, 1] keeps both on the same scale.
template <typename F>
double adaptive(F f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  const double len = b - a;
  return len * gauss_kronrod<double, 61>::integrate([&](double t) { return f(a + len * t); }, 0.0,
                                                    1.0, 20, tol);
}

// The integrands below are smooth on [0, R] and [R, 2R] but only continuous
// across R, so integrate the two pieces separately.
template <typename F>
double adaptive_split(F f, double a, double b, double knot, double tol) {
  if (a < knot && knot < b) return adaptive(f, a, knot, tol) + adaptive(f, knot, b, tol);
  return adaptive(f, a, b, tol);
}

}  // namespace

double gamma_tilde(double v, const Profile& p) {
  return model::gamma_profile(v, p) + p.K_sigma * v;
}

double gamma_tilde_root(const Profile& p) {
  return (1.0 + (p.K1 + p.K_sigma) / (p.K1 + p.K2)) * p.R;
}

double gamma_tilde_integral(double s, const Profile& p) {
  const double R = p.R;
  const double K1s = p.K1 + p.K_sigma;
  if (s <= R) return K1s * s * s / 2.0;
  auto bridge = [&](double v) {
    const double a = (p.K1 + p.K2) / R;
    return K1s * R * R / 2.0 - a * ((v * v * v - R * R * R) / 3.0 - R * (v * v - R * R) / 2.0) +
           K1s * (v * v - R * R) / 2.0;
  };
  if (s <= 2.0 * R) return bridge(s);
  const double base = R > 0.0 ? bridge(2.0 * R) : 0.0;
  return base - (p.K2 - p.K_sigma) * (s * s - 4.0 * R * R) / 2.0;
}

double f_slope_at_infinity(const Profile& p) {
  return 2.0 * p.beta / dissipative_gap(p);
}

double f_prime(double r, const Profile& p, double tol) {
  if (r < 0.0) throw std::invalid_argument("f_prime: r must be >= 0");
  const double gap = dissipative_gap(p);
  const double two_beta = 2.0 * p.beta;
  const double edge = 2.0 * p.R;
  if (r >= edge) return two_beta / gap;

  const double Gr = gamma_tilde_integral(r, p);
  const double body = adaptive_split(
      [&](double s) { return s * std::exp((gamma_tilde_integral(s, p) - Gr) / two_beta); }, r,
      edge, p.R, tol);
  // Beyond 2R, G(s) = G(2R) - (K2 - K_sigma)(s^2 - 4R^2)/2, so the tail is
  // exp((G(2R) - G(r))/2beta) / (2c) with c = (K2 - K_sigma)/(4 beta).
  const double c = gap / (2.0 * two_beta);
  const double tail = std::exp((gamma_tilde_integral(edge, p) - Gr) / two_beta) / (2.0 * c);
  return body + tail;
}

double f_value(double r, const Profile& p, double tol) {
  if (r < 0.0) throw std::invalid_argument("f_value: r must be >= 0");
  const double edge = 2.0 * p.R;
  const double inner = std::min(r, edge);
  // f_prime carries its own quadrature error, so the outer integral cannot
  // resolve below it.
  const double outer_tol = std::max(1e3 * tol, 1e-10);
  const double head =
      adaptive_split([&](double u) { return f_prime(u, p, tol); }, 0.0, inner, p.R, outer_tol);
  return head + std::max(0.0, r - edge) * f_slope_at_infinity(p);
}

double lambda_brownian(const Profile& p, double tol) {
  const double f0 = f_prime(0.0, p, tol);
  return 2.0 * p.beta / f0 - f0 * (p.K2 - p.K_sigma) * p.K_b / p.beta;
}

Admissibility check_kbkd(const Profile& p, double tol) {
  const double f0 = f_prime(0.0, p, tol);
  Admissibility a;
  a.threshold = 2.0 * p.beta * p.beta / ((p.K2 - p.K_sigma) * f0 * f0);
  a.margin = a.threshold - p.K_b;
  a.holds = p.K_b < a.threshold;
  return a;
}

double c_tilde(int dim, double alpha, double c_dalpha) {
  return c_dalpha * std::pow(2.0 / 3.0, dim + alpha) * std::pow(2.0, -dim) *
         noise::unit_ball_volume(dim);
}

double j_alpha_lower(double s, int dim, double alpha, double c_dalpha) {
  if (!(s > 0.0)) throw std::invalid_argument("j_alpha_lower: s must be > 0");
  return c_tilde(dim, alpha, c_dalpha) * std::pow(s, -alpha);
}

double j_alpha_exact(double s, int dim, double alpha, double c_dalpha, double tol) {
  if (!(s > 0.0)) throw std::invalid_argument("j_alpha_exact: s must be > 0");
  if (dim < 1) throw std::invalid_argument("j_alpha_exact: dim must be >= 1");
  // Put x = s e_1. On {z_1 >= s/2} the max is |z|, on the mirror half it is
  // |z - x|; both halves carry the same mass. The axial variable is written
  // u = (s/2) e^t so the integrand decays exponentially in t.
  const double half = s / 2.0;
  const double p = dim + alpha;
  exp_sinh<double> outer;
  double axial;
  if (dim == 1) {
    axial = outer.integrate(
        [&](double t) { return std::exp((1.0 - p) * (std::log(half) + t)); },
        0.0, std::numeric_limits<double>::infinity(), tol);
  } else {
    const double shell = noise::unit_sphere_area(dim - 1);
    exp_sinh<double> inner;
    axial = outer.integrate(
        [&](double t) {
          const double u = half * std::exp(t);
          if (!std::isfinite(u)) return 0.0;
          const double radial = inner.integrate(
              [&](double rho) {
                return shell * std::pow(rho, dim - 2) * std::pow(u * u + rho * rho, -p / 2.0);
              },
              0.0, std::numeric_limits<double>::infinity(), tol);
          return u * radial;
        },
        0.0, std::numeric_limits<double>::infinity(), tol);
  }
  return 2.0 * c_dalpha * axial;
}

StableConstants stable_constants(const Profile& profile, int dim, double eta, double kappa) {
  if (!(profile.alpha > 1.0 && profile.alpha < 2.0)) {
    throw std::invalid_argument("stable_constants: alpha must lie in (1,2)");
  }
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("stable_constants: eta must lie in (0,1)");
  if (!(profile.R > 0.0)) throw std::invalid_argument("stable_constants: ell0 (R) must be > 0");
  if (!(kappa > 0.0)) throw std::invalid_argument("stable_constants: kappa must be > 0");
  if (dim < 1) throw std::invalid_argument("stable_constants: dim must be >= 1");

  StableConstants sc;
  sc.alpha = profile.alpha;
  sc.dim = dim;
  sc.eta = eta;
  sc.kappa = kappa;
  sc.ell0 = profile.R;
  sc.K1 = profile.K1;
  sc.K2 = profile.K2;
  sc.K_b = profile.K_b;
  sc.c_dalpha = noise::stable_normalization(dim, profile.alpha);
  sc.c_tilde = c_tilde(dim, profile.alpha, sc.c_dalpha);

  const double two_l0 = 2.0 * sc.ell0;
  sc.sigma_eta_coeff = sc.c_tilde * std::pow(std::min(kappa, two_l0), 2.0 - sc.alpha) /
                       (2.0 * std::pow(two_l0, 1.0 + eta));
  sc.g_eta_2l0 = g_eta(two_l0, sc);
  sc.c1 = std::exp(-2.0 * sc.K2 * sc.g_eta_2l0);
  sc.psi_prime_0 = 1.0 + sc.c1;
  sc.lambda = 2.0 * sc.c1 * sc.K2 / (1.0 + sc.c1) - sc.K_b * (1.0 + sc.c1) / sc.c1;
  sc.condition.threshold = 2.0 * sc.c1 * sc.c1 * sc.K2 / ((1.0 + sc.c1) * (1.0 + sc.c1));
  sc.condition.margin = sc.condition.threshold - sc.K_b;
  sc.condition.holds = sc.K_b < sc.condition.threshold;
  sc.prefactor = (1.0 + sc.c1) / (2.0 * sc.c1);
  return sc;
}

double g_eta(double r, const StableConstants& sc) {
  const double rr = std::clamp(r, 0.0, 2.0 * sc.ell0);
  return (1.0 + sc.K1 / sc.K2) * std::pow(rr, 1.0 - sc.eta) / ((1.0 - sc.eta) * sc.sigma_eta_coeff);
}

double psi(double r, const StableConstants& sc) {
  if (r < 0.0) throw std::invalid_argument("psi: r must be >= 0");
  const double two_l0 = 2.0 * sc.ell0;
  const double rr = std::min(r, two_l0);
  // int_0^rr exp(-b s^q) ds = b^{-1/q} / q * gamma_lower(1/q, b rr^q)
  const double q = 1.0 - sc.eta;
  const double b = 2.0 * sc.K2 * (1.0 + sc.K1 / sc.K2) / ((1.0 - sc.eta) * sc.sigma_eta_coeff);
  double head = 0.0;
  if (rr > 0.0) {
    head = std::pow(b, -1.0 / q) / q * boost::math::tgamma_lower(1.0 / q, b * std::pow(rr, q));
  }
  const double inner = sc.c1 * rr + head;
  return inner + 2.0 * sc.c1 * std::max(0.0, r - two_l0);
}

double psi_prime(double r, const StableConstants& sc) {
  if (r >= 2.0 * sc.ell0) return 2.0 * sc.c1;
  return sc.c1 + std::exp(-2.0 * sc.K2 * g_eta(r, sc));
}

double psi_second(double r, const StableConstants& sc) {
  if (r >= 2.0 * sc.ell0 || r <= 0.0) {
    return r <= 0.0 ? -std::numeric_limits<double>::infinity() : 0.0;
  }
  const double g_prime = (1.0 + sc.K1 / sc.K2) / (sc.sigma_eta_coeff * std::pow(r, sc.eta));
  return -2.0 * sc.K2 * g_prime * std::exp(-2.0 * sc.K2 * g_eta(r, sc));
}

double optimal_eta(const Profile& profile, int dim, double kappa, double lo, double hi) {
  if (!(lo > 0.0 && hi < 1.0 && lo < hi)) throw std::invalid_argument("optimal_eta: bad bracket");
  const auto best = boost::math::tools::brent_find_minima(
      [&](double eta) { return -stable_constants(profile, dim, eta, kappa).lambda; }, lo, hi, 40);
  return best.first;
}

RateConstants rate_constants(const model::ModelSpec& model, const StableChoice& choice) {
  RateConstants out;
  const auto& p = model.profile;
  if (p.brownian()) {
    BrownianConstants b;
    b.f_prime_0 = f_prime(0.0, p);
    b.slope_at_infinity = f_slope_at_infinity(p);
    b.lambda = lambda_brownian(p);
    b.condition = check_kbkd(p);
    b.prefactor = b.f_prime_0 / b.slope_at_infinity;
    b.gamma_tilde_root = gamma_tilde_root(p);
    out.brownian = b;
  } else {
    const double kappa = choice.kappa.value_or(p.R);
    out.stable = stable_constants(p, model.dim, choice.eta.value_or(0.5), kappa);
  }
  return out;
}

}  // namespace chaosbench::constants
