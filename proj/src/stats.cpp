#include "chaosbench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

namespace chaosbench::stats {

double kolmogorov_q(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;  // 1 - Q(0.2) is below 1e-12; the series converges slowly here
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += sign * term;
    if (term < 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  const double ne = na * nb / (na + nb);
  const double sq = std::sqrt(ne);
  return KsResult{d, kolmogorov_q((sq + 0.12 + 0.11 / sq) * d)};
}

double chi_square_sf(double x, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("chi_square_sf: k must be > 0");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(k / 2.0, x / 2.0);
}

MeanVar mean_var(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("mean_var: needs at least 2 values");
  const double n = static_cast<double>(xs.size());
  double m = 0.0;
  for (double x : xs) m += x;
  m /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double c = (x - m) * (x - m);
    m2 += c;
    m4 += c * c;
  }
  MeanVar out;
  out.mean = m;
  out.variance = m2 / (n - 1.0);
  out.mean_stderr = std::sqrt(out.variance / n);
  const double mu2 = m2 / n;
  const double mu4 = m4 / n;
  out.variance_stderr = std::sqrt(std::max(0.0, (mu4 - mu2 * mu2) / n));
  return out;
}

}  // namespace chaosbench::stats
