#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace chaosbench::metrics {

struct Assignment {
  std::vector<std::size_t> row_to_col;
  double cost = 0.0;  // total, not averaged
};

/// Exact minimum-cost perfect matching on an n x n row-major cost matrix
/// (Hungarian algorithm with potentials, O(n^3)).
Assignment hungarian(std::span<const double> cost, std::size_t n);

/// Forward auction with epsilon scaling. The final epsilon is below
/// max_cost * 1e-9 / n, so the result is optimal up to that slack; it is
/// exact whenever costs are separated by more than n * epsilon.
Assignment auction(std::span<const double> cost, std::size_t n);

/// Hungarian for n <= 512, auction for 512 < n <= 4096. Throws
/// std::invalid_argument beyond that or on a size mismatch.
Assignment solve_assignment(std::span<const double> cost, std::size_t n);

}  // namespace chaosbench::metrics
