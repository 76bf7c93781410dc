#pragma once

#include <span>

namespace chaosbench::stats {

/// Kolmogorov survival function Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2).
double kolmogorov_q(double x);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// Q((sqrt(n_e) + 0.12 + 0.11 / sqrt(n_e)) D), n_e = n m / (n + m).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Upper tail of the chi-square law with k degrees of freedom.
double chi_square_sf(double x, double k);

struct MeanVar {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double mean_stderr = 0.0;
  /// Standard error of the sample variance from the fourth central moment.
  double variance_stderr = 0.0;
};

MeanVar mean_var(std::span<const double> xs);

}  // namespace chaosbench::stats
