#pragma once

#include <optional>

#include "chaosbench/model.hpp"

namespace chaosbench::constants {

/// Relative tolerance of every quadrature in this module.
inline constexpr double kDefaultTolerance = 1e-12;

// ---- Brownian case -------------------------------------------------------

/// gamma(v) + K_sigma v.
double gamma_tilde(double v, const model::DissipativityProfile& profile);

/// Sign change point of gamma_tilde: (1 + (K1 + K_sigma)/(K1 + K2)) R.
double gamma_tilde_root(const model::DissipativityProfile& profile);

/// G(s) = integral of gamma_tilde over [0, s], closed form.
double gamma_tilde_integral(double s, const model::DissipativityProfile& profile);

/// f'(r) = exp(-G(r)/2beta) int_r^inf s exp(G(s)/2beta) ds. Adaptive
/// Gauss-Kronrod on [r, 2R] and the Gaussian tail beyond 2R in closed form.
/// Throws std::domain_error when K2 <= K_sigma (the integral diverges).
double f_prime(double r, const model::DissipativityProfile& profile,
               double tolerance = kDefaultTolerance);

/// f(r) = int_0^r f'(u) du, to about 1e3 times the tolerance.
double f_value(double r, const model::DissipativityProfile& profile,
               double tolerance = kDefaultTolerance);

/// 2 beta / (K2 - K_sigma): the limit of f'(r) and the slope of the lower
/// linear bound on f.
double f_slope_at_infinity(const model::DissipativityProfile& profile);

struct Admissibility {
  bool holds = false;
  double threshold = 0.0;  // largest admissible K_b (exclusive)
  double margin = 0.0;     // threshold - K_b
};

/// lambda = 2 beta / f'(0) - f'(0) (K2 - K_sigma) K_b / beta.
double lambda_brownian(const model::DissipativityProfile& profile,
                       double tolerance = kDefaultTolerance);

/// K_b < 2 beta^2 / ((K2 - K_sigma) f'(0)^2).
Admissibility check_kbkd(const model::DissipativityProfile& profile,
                         double tolerance = kDefaultTolerance);

// ---- stable case ---------------------------------------------------------

/// c_tilde = c_{d,alpha} (2/3)^{d+alpha} 2^{-d} V_d.
double c_tilde(int dim, double alpha, double c_dalpha);

/// c_tilde s^{-alpha}. Throws std::invalid_argument for s <= 0.
double j_alpha_lower(double s, int dim, double alpha, double c_dalpha);

/// Overlap mass int c / max(|z|, |z - x|)^{d+alpha} dz at |x| = s, by
/// quadrature. Throws std::invalid_argument for s <= 0.
double j_alpha_exact(double s, int dim, double alpha, double c_dalpha,
                     double tolerance = 1e-10);

struct StableConstants {
  double alpha = 1.5;
  int dim = 1;
  double eta = 0.5;
  double kappa = 0.0;
  double ell0 = 0.0;
  double K1 = 0.0;
  double K2 = 1.0;
  double K_b = 0.0;
  double c_dalpha = 0.0;
  double c_tilde = 0.0;
  double sigma_eta_coeff = 0.0;  // sigma_eta(r) = coeff r^eta on [0, 2 ell0]
  double g_eta_2l0 = 0.0;
  double c1 = 0.0;
  double psi_prime_0 = 0.0;  // 1 + c1
  double lambda = 0.0;
  Admissibility condition;
  /// (1 + c1) / (2 c1): ratio of the two linear bounds on psi.
  double prefactor = 0.0;
};

/// All stable-case constants for ell0 = profile.R. Throws
/// std::invalid_argument for eta outside (0,1), ell0 <= 0, kappa <= 0 or
/// alpha outside (1,2).
StableConstants stable_constants(const model::DissipativityProfile& profile, int dim, double eta,
                                 double kappa);

/// g_eta(r) = (1 + K1/K2) r^{1-eta} / ((1 - eta) coeff), r in [0, 2 ell0].
double g_eta(double r, const StableConstants& sc);

/// psi(r) = c1 r + int_0^r exp(-2 K2 g_eta(s)) ds on [0, 2 ell0] (via the
/// lower incomplete gamma function), continued linearly with slope 2 c1.
double psi(double r, const StableConstants& sc);
double psi_prime(double r, const StableConstants& sc);
double psi_second(double r, const StableConstants& sc);

/// The eta in (0,1) maximizing lambda_stable, by Brent's method on
/// [eta_lo, eta_hi].
double optimal_eta(const model::DissipativityProfile& profile, int dim, double kappa,
                   double eta_lo = 1e-6, double eta_hi = 1.0 - 1e-6);

// ---- bundle --------------------------------------------------------------

struct BrownianConstants {
  double f_prime_0 = 0.0;
  double slope_at_infinity = 0.0;  // 2 beta / (K2 - K_sigma)
  double lambda = 0.0;
  Admissibility condition;
  /// f'(0) / (2 beta / (K2 - K_sigma)): ratio of the two linear bounds on f.
  double prefactor = 0.0;
  double gamma_tilde_root = 0.0;
};

struct RateConstants {
  std::optional<BrownianConstants> brownian;
  std::optional<StableConstants> stable;
};

struct StableChoice {
  std::optional<double> eta;    // 0.5 when unset
  std::optional<double> kappa;  // ell0 when unset
};

RateConstants rate_constants(const model::ModelSpec& model, const StableChoice& choice = {});

}  // namespace chaosbench::constants
