#include "mad/dtw.hpp"

#include <algorithm>
#include <limits>

namespace mad {

DtwResult dtw_solve(const CostMatrix& cost) {
  const auto rows = cost.rows();
  const auto cols = cost.cols();
  if (rows < 1 || cols < 1) throw InvalidInput("dtw_solve: empty cost matrix");
  if (!cost.allFinite()) throw InvalidInput("dtw_solve: non-finite cost entry");

  Eigen::MatrixXd acc(rows, cols);
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (Eigen::Index s = 0; s < rows; ++s) {
    for (Eigen::Index t = 0; t < cols; ++t) {
      double best = (s == 0 && t == 0) ? 0.0 : inf;
      if (s > 0 && t > 0) best = std::min(best, acc(s - 1, t - 1));
      if (s > 0) best = std::min(best, acc(s - 1, t));
      if (t > 0) best = std::min(best, acc(s, t - 1));
      acc(s, t) = best + cost(s, t);
    }
  }

  DtwResult result;
  result.cost = acc(rows - 1, cols - 1);
  auto& steps = result.path.steps;
  steps.reserve(static_cast<std::size_t>(rows + cols));
  Eigen::Index s = rows - 1;
  Eigen::Index t = cols - 1;
  steps.emplace_back(static_cast<int>(s), static_cast<int>(t));
  while (s > 0 || t > 0) {
    if (s == 0) {
      --t;
    } else if (t == 0) {
      --s;
    } else {
      const double diag = acc(s - 1, t - 1);
      const double up = acc(s - 1, t);
      const double left = acc(s, t - 1);
      if (diag <= up && diag <= left) {
        --s;
        --t;
      } else if (up <= left) {
        --s;
      } else {
        --t;
      }
    }
    steps.emplace_back(static_cast<int>(s), static_cast<int>(t));
  }
  std::reverse(steps.begin(), steps.end());
  return result;
}

DtwResult dtw_pair(const Series& x, const Series& y, FrameMetric metric) {
  return dtw_solve(pairwise_frame_cost_slice(x, y, metric));
}

namespace {

void extend_paths(int rows, int cols, WarpingPath& prefix, std::vector<WarpingPath>& out) {
  const auto [s, t] = prefix.steps.back();
  if (s == rows - 1 && t == cols - 1) {
    out.push_back(prefix);
    return;
  }
  constexpr std::pair<int, int> moves[] = {{1, 1}, {1, 0}, {0, 1}};
  for (const auto& [ds, dt] : moves) {
    if (s + ds < rows && t + dt < cols) {
      prefix.steps.emplace_back(s + ds, t + dt);
      extend_paths(rows, cols, prefix, out);
      prefix.steps.pop_back();
    }
  }
}

}  // namespace

std::uint64_t count_paths(int rows, int cols) {
  if (rows < 1 || cols < 1) return 0;
  std::vector<std::uint64_t> prev(static_cast<std::size_t>(cols), 1), cur(static_cast<std::size_t>(cols));
  for (int s = 1; s < rows; ++s) {
    cur[0] = 1;
    for (int t = 1; t < cols; ++t) cur[t] = prev[t] + cur[t - 1] + prev[t - 1];
    std::swap(prev, cur);
  }
  return prev.back();
}

std::vector<WarpingPath> enumerate_paths(int rows, int cols) {
  if (rows < 1 || cols < 1) throw InvalidInput("enumerate_paths: sizes must be positive");
  if (rows > 8 || cols > 8) throw InvalidInput("enumerate_paths: sizes above 8 are refused");
  std::vector<WarpingPath> out;
  out.reserve(count_paths(rows, cols));
  WarpingPath prefix;
  prefix.steps.emplace_back(0, 0);
  extend_paths(rows, cols, prefix, out);
  return out;
}

WarpingPath random_path(int rows, int cols, std::mt19937_64& rng) {
  if (rows < 1 || cols < 1) throw DimensionError("random_path: sizes must be positive");
  WarpingPath path;
  int s = 0;
  int t = 0;
  path.steps.emplace_back(s, t);
  while (s < rows - 1 || t < cols - 1) {
    std::pair<int, int> options[3];
    int count = 0;
    if (s < rows - 1 && t < cols - 1) options[count++] = {1, 1};
    if (s < rows - 1) options[count++] = {1, 0};
    if (t < cols - 1) options[count++] = {0, 1};
    std::uniform_int_distribution<int> pick(0, count - 1);
    const auto [ds, dt] = options[pick(rng)];
    s += ds;
    t += dt;
    path.steps.emplace_back(s, t);
  }
  return path;
}

}  // namespace mad
