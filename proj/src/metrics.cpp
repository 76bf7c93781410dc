#include "chaosbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "chaosbench/assignment.hpp"
#include "chaosbench/parallel.hpp"

namespace chaosbench::metrics {
namespace {

double euclid(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

void check_pair_shapes(const SampleSet& a, const SampleSet& b) {
  if (a.dim < 1 || a.dim != b.dim) throw std::invalid_argument("sample sets differ in dimension");
  if (a.size() == 0 || b.size() == 0) throw std::invalid_argument("empty sample set");
  if (a.points.size() % a.dim != 0 || b.points.size() % b.dim != 0) {
    throw std::invalid_argument("sample storage is not a whole number of rows");
  }
}

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct Axis {
  double lo = 0.0;
  double width = 1.0;
  int inner = 1;
  bool overflow = false;

  int cells() const { return inner + (overflow ? 2 : 0); }
  int index(double x) const {
    const int k = static_cast<int>(std::floor((x - lo) / width));
    if (overflow) return std::clamp(k, -1, inner) + 1;
    return std::clamp(k, 0, inner - 1);
  }
};

Axis make_axis(const SampleSet& a, const SampleSet& b, int axis, const Binning& bin) {
  std::vector<double> pooled;
  pooled.reserve(a.size() + b.size());
  for (const SampleSet* s : {&a, &b}) {
    for (std::size_t i = 0; i < s->size(); ++i) pooled.push_back(s->row(i)[axis]);
  }
  for (double x : pooled) {
    if (!std::isfinite(x)) throw std::invalid_argument("tv_histogram: non-finite sample");
  }
  Axis ax;
  if (bin.rule == Binning::Rule::fixed) {
    if (bin.bins < 1) throw std::invalid_argument("tv_histogram: bins must be >= 1");
    double lo, hi;
    if (static_cast<int>(bin.lo.size()) > axis && static_cast<int>(bin.hi.size()) > axis) {
      lo = bin.lo[axis];
      hi = bin.hi[axis];
    } else {
      const auto [mn, mx] = std::minmax_element(pooled.begin(), pooled.end());
      lo = *mn;
      hi = *mx;
    }
    if (!(hi > lo)) throw std::invalid_argument("tv_histogram: degenerate range");
    ax.lo = lo;
    ax.inner = bin.bins;
    ax.width = (hi - lo) / bin.bins;
    ax.overflow = bin.overflow;
    return ax;
  }

  std::sort(pooled.begin(), pooled.end());
  const double lo = pooled.front();
  const double hi = pooled.back();
  if (!(hi > lo)) throw std::invalid_argument("tv_histogram: degenerate range");
  const double iqr = quantile_sorted(pooled, 0.75) - quantile_sorted(pooled, 0.25);
  double h = 2.0 * iqr * std::cbrt(1.0 / static_cast<double>(pooled.size()));
  int inner = 1;
  if (h > 0.0) inner = static_cast<int>(std::ceil((hi - lo) / h));
  inner = std::clamp(inner, 1, 4096);
  ax.lo = lo;
  ax.inner = inner;
  // Widen slightly so the maximum lands in the last cell.
  ax.width = (hi - lo) / inner * (1.0 + 1e-12);
  return ax;
}

}  // namespace

double w1_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("w1_1d: empty sample set");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  if (sa.size() == sb.size()) {
    double s = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i) s += std::abs(sa[i] - sb[i]);
    return s / static_cast<double>(sa.size());
  }
  // Integral of |F_a - F_b| between consecutive pooled points.
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double prev = std::min(sa.front(), sb.front());
  double total = 0.0;
  while (i < sa.size() || j < sb.size()) {
    const double next = (j >= sb.size() || (i < sa.size() && sa[i] <= sb[j])) ? sa[i] : sb[j];
    total += std::abs(i / na - j / nb) * (next - prev);
    prev = next;
    while (i < sa.size() && sa[i] == next) ++i;
    while (j < sb.size() && sb[j] == next) ++j;
  }
  return total;
}

double w1_assignment(const SampleSet& a, const SampleSet& b) {
  check_pair_shapes(a, b);
  const std::size_t n = a.size();
  if (b.size() != n) throw std::invalid_argument("w1_assignment: sizes differ");
  if (n > 4096) throw std::invalid_argument("w1_assignment: n > 4096 is not supported");
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = euclid(a.row(i), b.row(j));
  }
  return solve_assignment(cost, n).cost / static_cast<double>(n);
}

double rho1_distance(std::span<const double> x, std::span<const double> y, int block_dim) {
  if (block_dim < 1 || x.size() != y.size() || x.size() % block_dim != 0) {
    throw std::invalid_argument("rho1_distance: shape mismatch");
  }
  double s = 0.0;
  for (std::size_t off = 0; off < x.size(); off += block_dim) {
    s += euclid(x.subspan(off, block_dim), y.subspan(off, block_dim));
  }
  return s;
}

double w1_product(const SampleSet& a, const SampleSet& b, int block_dim) {
  check_pair_shapes(a, b);
  if (block_dim < 1 || a.dim % block_dim != 0) {
    throw std::invalid_argument("w1_product: dim is not a multiple of block_dim");
  }
  const std::size_t n = a.size();
  if (b.size() != n) throw std::invalid_argument("w1_product: sizes differ");
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      cost[i * n + j] = rho1_distance(a.row(i), b.row(j), block_dim);
    }
  }
  return solve_assignment(cost, n).cost / static_cast<double>(n);
}

double tv_histogram(const SampleSet& a, const SampleSet& b, const Binning& binning) {
  check_pair_shapes(a, b);
  if (a.dim > 2) throw std::invalid_argument("tv_histogram: only d <= 2 is supported");
  std::vector<Axis> axes;
  for (int k = 0; k < a.dim; ++k) axes.push_back(make_axis(a, b, k, binning));

  std::size_t cells = 1;
  for (const auto& ax : axes) cells *= static_cast<std::size_t>(ax.cells());
  std::vector<double> ha(cells, 0.0), hb(cells, 0.0);
  auto cell_of = [&](std::span<const double> p) {
    std::size_t idx = 0;
    for (int k = 0; k < a.dim; ++k) idx = idx * axes[k].cells() + axes[k].index(p[k]);
    return idx;
  };
  for (std::size_t i = 0; i < a.size(); ++i) ha[cell_of(a.row(i))] += 1.0;
  for (std::size_t i = 0; i < b.size(); ++i) hb[cell_of(b.row(i))] += 1.0;

  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double tv = 0.0;
  for (std::size_t c = 0; c < cells; ++c) tv += std::abs(ha[c] / na - hb[c] / nb);
  return std::min(tv, 2.0);
}

double tv_coupling_bound(double merged_fraction) {
  return 2.0 * (1.0 - std::clamp(merged_fraction, 0.0, 1.0));
}

ScalarLaw pareto_law(double x_m, double tail_index) {
  if (!(x_m > 0.0) || !(tail_index > 1.0)) {
    throw std::invalid_argument("pareto_law: needs x_m > 0 and tail index > 1");
  }
  return ScalarLaw{[x_m, tail_index](Stream& rng) {
                     return x_m * std::pow(rng.uniform(), -1.0 / tail_index);
                   },
                   tail_index * x_m / (tail_index - 1.0)};
}

ScalarLaw gaussian_law(double mean, double sd) {
  return ScalarLaw{[mean, sd](Stream& rng) { return mean + sd * rng.normal(); }, mean};
}

ScalarLaw constant_law(double value) {
  return ScalarLaw{[value](Stream&) { return value; }, value};
}

LlnEstimate lln_error(const ScalarLaw& law, std::size_t N, std::size_t reps,
                      std::uint64_t seed, int workers) {
  if (N < 1 || reps < 1) throw std::invalid_argument("lln_error: N and reps must be >= 1");
  std::vector<double> err(reps);
  parallel_for(reps, workers, [&](std::size_t r) {
    Stream rng(StreamKey{seed, StreamRole::lln, N, r});
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) s += law.sample(rng);
    err[r] = std::abs(s / static_cast<double>(N) - law.mean);
  });
  LlnEstimate out;
  double s = 0.0, s2 = 0.0;
  for (double e : err) {
    s += e;
    s2 += e * e;
  }
  const double n = static_cast<double>(reps);
  out.mean = s / n;
  if (reps > 1) {
    const double var = std::max(0.0, (s2 - n * out.mean * out.mean) / (n - 1.0));
    out.std_error = std::sqrt(var / n);
  }
  return out;
}

double lln_truncation_bound(double moment, double eps, double N) {
  if (!(moment > 0.0) || !(eps > 0.0 && eps < 1.0) || !(N >= 1.0)) {
    throw std::invalid_argument("lln_truncation_bound: needs moment > 0, eps in (0,1), N >= 1");
  }
  const double a = std::pow(2.0 * std::sqrt(2.0) * eps / (1.0 - eps), 2.0 / (1.0 + eps)) *
                   std::pow(moment, 1.0 / (1.0 + eps)) * std::pow(N, 1.0 / (1.0 + eps));
  return std::sqrt(2.0 * std::pow(a, 1.0 - eps) * moment / N) + 2.0 * moment * std::pow(a, -eps);
}

RateFit rate_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("rate_fit: xs and ys differ in length");
  if (xs.size() < 4) throw std::invalid_argument("rate_fit: needs at least 4 points");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
      throw std::invalid_argument("rate_fit: values must be positive");
    }
    if (i > 0 && !(xs[i] > xs[i - 1])) {
      throw std::invalid_argument("rate_fit: xs must be strictly increasing");
    }
  }
  RateFit fit;
  fit.xs.assign(xs.begin(), xs.end());
  fit.ys.assign(ys.begin(), ys.end());
  const std::size_t n = xs.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - fit.intercept - fit.slope * lx[i];
    rss += r * r;
  }
  fit.slope_stderr = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  return fit;
}

}  // namespace chaosbench::metrics
