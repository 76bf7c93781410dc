#include "chaosbench/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace chaosbench::metrics {

Assignment hungarian(std::span<const double> cost, std::size_t n) {
  if (cost.size() != n * n) throw std::invalid_argument("hungarian: cost must be n x n");
  Assignment out;
  if (n == 0) return out;

  // 1-based shortest augmenting path formulation; p[j] is the row matched
  // to column j.
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  out.row_to_col.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) out.row_to_col[p[j] - 1] = j - 1;
  for (std::size_t i = 0; i < n; ++i) out.cost += cost[i * n + out.row_to_col[i]];
  return out;
}

Assignment auction(std::span<const double> cost, std::size_t n) {
  if (cost.size() != n * n) throw std::invalid_argument("auction: cost must be n x n");
  Assignment out;
  if (n == 0) return out;

  // Maximize benefit = -cost.
  double max_cost = 0.0;
  for (double c : cost) max_cost = std::max(max_cost, std::abs(c));
  const double final_eps = std::max(max_cost * 1e-9 / static_cast<double>(n), 1e-300);
  double eps = std::max(max_cost / 4.0, final_eps);

  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::vector<double> price(n, 0.0);
  std::vector<std::size_t> owner(n), assigned(n);
  std::vector<std::size_t> queue;
  queue.reserve(n);

  while (true) {
    std::fill(owner.begin(), owner.end(), none);
    std::fill(assigned.begin(), assigned.end(), none);
    queue.clear();
    for (std::size_t i = n; i-- > 0;) queue.push_back(i);

    while (!queue.empty()) {
      const std::size_t i = queue.back();
      queue.pop_back();
      const double* row = cost.data() + i * n;
      double best = -std::numeric_limits<double>::infinity();
      double second = best;
      std::size_t best_j = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const double value = -row[j] - price[j];
        if (value > best) {
          second = best;
          best = value;
          best_j = j;
        } else if (value > second) {
          second = value;
        }
      }
      const double bid = n == 1 ? eps : best - second + eps;
      price[best_j] += bid;
      const std::size_t prev = owner[best_j];
      owner[best_j] = i;
      assigned[i] = best_j;
      if (prev != none) {
        assigned[prev] = none;
        queue.push_back(prev);
      }
    }
    if (eps <= final_eps) break;
    eps = std::max(eps / 5.0, final_eps);
  }

  out.row_to_col = assigned;
  for (std::size_t i = 0; i < n; ++i) out.cost += cost[i * n + assigned[i]];
  return out;
}

Assignment solve_assignment(std::span<const double> cost, std::size_t n) {
  if (cost.size() != n * n) throw std::invalid_argument("assignment: cost must be n x n");
  if (n <= 512) return hungarian(cost, n);
  if (n <= 4096) return auction(cost, n);
  throw std::invalid_argument("assignment: n > 4096 is not supported");
}

}  // namespace chaosbench::metrics
