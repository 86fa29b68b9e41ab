#pragma once

#include "mad/core.hpp"

#include <cstdint>
#include <random>

namespace mad {

struct DtwResult {
  WarpingPath path;
  double cost = 0.0;
};

/// Exact DTW over an arbitrary non-negative cost matrix with steps {(1,0), (0,1), (1,1)}.
/// Backtracking prefers the diagonal predecessor, then (s-1, t), then (s, t-1).
DtwResult dtw_solve(const CostMatrix& cost);

/// dtw_solve on the frame-cost slice of two series.
DtwResult dtw_pair(const Series& x, const Series& y, FrameMetric metric = FrameMetric::Euclidean);

/// Every admissible path for a rows x cols alignment. Test oracle; both sizes must be <= 8.
std::vector<WarpingPath> enumerate_paths(int rows, int cols);

/// Number of admissible paths (Delannoy number D(rows-1, cols-1)).
std::uint64_t count_paths(int rows, int cols);

/// Monotone random walk from (0,0) to (rows-1, cols-1), choosing uniformly among the
/// admissible steps at each cell.
WarpingPath random_path(int rows, int cols, std::mt19937_64& rng);

}  // namespace mad
