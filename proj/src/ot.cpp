#include "mad/ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace mad {

namespace {

constexpr double kSupplyPerturbation = 1e-12;
constexpr double kDropBelow = 1e-12;

struct BasicCell {
  int row;
  int col;
  double mass;
};

// Spanning-tree basis of the transportation problem. Nodes 0..m-1 are rows,
// m..m+k-1 are columns; each basic cell is an edge between a row and a column.
class TransportationSimplex {
 public:
  TransportationSimplex(const CostMatrix& cost, const Eigen::VectorXd& supply,
                        const Eigen::VectorXd& demand)
      : cost_(cost),
        m_(static_cast<int>(cost.rows())),
        k_(static_cast<int>(cost.cols())),
        supply_(supply),
        demand_(demand),
        adjacency_(static_cast<std::size_t>(m_ + k_)),
        u_(m_),
        v_(k_) {
    const double scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
    tolerance_ = 1e-11 * scale;
  }

  void solve() {
    northwest_corner();
    const long long cells = static_cast<long long>(m_) * k_;
    const long long max_pivots = 1000LL * (m_ + k_) + 10000;
    const long long block = std::max<long long>(16, static_cast<long long>(std::sqrt(static_cast<double>(cells))));
    long long cursor = 0;
    for (long long pivot = 0;; ++pivot) {
      if (pivot > max_pivots) throw SolverError("ot_solve: pivot limit exceeded");
      compute_potentials();
      // Block search pricing: return the best candidate of the first block that has one.
      int enter_row = -1;
      int enter_col = -1;
      double best = -tolerance_;
      long long scanned = 0;
      while (scanned < cells) {
        const long long stop = std::min(cells, scanned + block);
        for (; scanned < stop; ++scanned) {
          const long long idx = cursor;
          cursor = cursor + 1 == cells ? 0 : cursor + 1;
          const int i = static_cast<int>(idx / k_);
          const int j = static_cast<int>(idx % k_);
          const double reduced = cost_(i, j) - u_[i] - v_[j];
          if (reduced < best) {
            best = reduced;
            enter_row = i;
            enter_col = j;
          }
        }
        if (enter_row >= 0) break;
      }
      if (enter_row < 0) return;
      pivot_on(enter_row, enter_col);
    }
  }

  /// Basic solution recomputed from the given marginals on the final basis.
  [[nodiscard]] std::vector<BasicCell> basic_solution(const Eigen::VectorXd& supply,
                                                      const Eigen::VectorXd& demand) const {
    std::vector<BasicCell> out = cells_;
    std::vector<double> remaining(static_cast<std::size_t>(m_ + k_));
    for (int i = 0; i < m_; ++i) remaining[i] = supply[i];
    for (int j = 0; j < k_; ++j) remaining[m_ + j] = demand[j];
    std::vector<int> degree(static_cast<std::size_t>(m_ + k_));
    for (int node = 0; node < m_ + k_; ++node) degree[node] = static_cast<int>(adjacency_[node].size());
    std::vector<char> assigned(out.size(), 0);
    std::vector<int> leaves;
    for (int node = 0; node < m_ + k_; ++node) {
      if (degree[node] == 1) leaves.push_back(node);
    }
    std::size_t done = 0;
    while (!leaves.empty() && done < out.size()) {
      const int node = leaves.back();
      leaves.pop_back();
      if (degree[node] != 1) continue;
      int edge = -1;
      for (int e : adjacency_[node]) {
        if (!assigned[e]) {
          edge = e;
          break;
        }
      }
      if (edge < 0) continue;
      const int other = node < m_ ? m_ + out[edge].col : out[edge].row;
      out[edge].mass = remaining[node];
      remaining[other] -= remaining[node];
      remaining[node] = 0.0;
      assigned[edge] = 1;
      ++done;
      --degree[node];
      if (--degree[other] == 1) leaves.push_back(other);
    }
    if (done != out.size()) throw SolverError("ot_solve: basis is not a spanning tree");
    return out;
  }

 private:
  void add_cell(int i, int j, double mass) {
    const int id = static_cast<int>(cells_.size());
    cells_.push_back({i, j, mass});
    adjacency_[i].push_back(id);
    adjacency_[m_ + j].push_back(id);
  }

  void northwest_corner() {
    std::vector<double> ra(supply_.data(), supply_.data() + m_);
    std::vector<double> rb(demand_.data(), demand_.data() + k_);
    int i = 0;
    int j = 0;
    cells_.reserve(static_cast<std::size_t>(m_ + k_ - 1));
    while (true) {
      const double x = std::min(ra[i], rb[j]);
      add_cell(i, j, std::max(0.0, x));
      ra[i] -= x;
      rb[j] -= x;
      if (i == m_ - 1 && j == k_ - 1) break;
      if (i == m_ - 1) {
        ++j;
      } else if (j == k_ - 1) {
        ++i;
      } else if (ra[i] <= rb[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  void compute_potentials() {
    std::vector<char> seen(static_cast<std::size_t>(m_ + k_), 0);
    std::vector<int> stack{0};
    u_[0] = 0.0;
    seen[0] = 1;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      for (int e : adjacency_[node]) {
        const auto& cell = cells_[e];
        const int row_node = cell.row;
        const int col_node = m_ + cell.col;
        if (node == row_node && !seen[col_node]) {
          v_[cell.col] = cost_(cell.row, cell.col) - u_[cell.row];
          seen[col_node] = 1;
          stack.push_back(col_node);
        } else if (node == col_node && !seen[row_node]) {
          u_[cell.row] = cost_(cell.row, cell.col) - v_[cell.col];
          seen[row_node] = 1;
          stack.push_back(row_node);
        }
      }
    }
  }

  // Tree path (as basic cell ids) from row node `from` to column node `to`.
  std::vector<int> tree_path(int from, int to) const {
    std::vector<int> parent_edge(static_cast<std::size_t>(m_ + k_), -1);
    std::vector<char> seen(static_cast<std::size_t>(m_ + k_), 0);
    std::vector<int> stack{from};
    seen[from] = 1;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      if (node == to) break;
      for (int e : adjacency_[node]) {
        const int other = node < m_ ? m_ + cells_[e].col : cells_[e].row;
        if (!seen[other]) {
          seen[other] = 1;
          parent_edge[other] = e;
          stack.push_back(other);
        }
      }
    }
    std::vector<int> path;
    for (int node = to; node != from;) {
      const int e = parent_edge[node];
      path.push_back(e);
      node = node < m_ ? m_ + cells_[e].col : cells_[e].row;
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  void pivot_on(int enter_row, int enter_col) {
    // Cycle: entering cell gains theta, path edges alternate starting with a loss at the row.
    const std::vector<int> path = tree_path(enter_row, m_ + enter_col);
    double theta = std::numeric_limits<double>::infinity();
    int leaving = -1;
    for (std::size_t p = 0; p < path.size(); p += 2) {
      if (cells_[path[p]].mass < theta) {
        theta = cells_[path[p]].mass;
        leaving = path[p];
      }
    }
    for (std::size_t p = 0; p < path.size(); ++p) {
      auto& mass = cells_[path[p]].mass;
      mass = (p % 2 == 0) ? mass - theta : mass + theta;
    }
    auto detach = [this](int node, int edge) {
      auto& list = adjacency_[node];
      list.erase(std::find(list.begin(), list.end(), edge));
    };
    detach(cells_[leaving].row, leaving);
    detach(m_ + cells_[leaving].col, leaving);
    cells_[leaving] = {enter_row, enter_col, theta};
    adjacency_[enter_row].push_back(leaving);
    adjacency_[m_ + enter_col].push_back(leaving);
  }

  const CostMatrix& cost_;
  int m_;
  int k_;
  Eigen::VectorXd supply_;
  Eigen::VectorXd demand_;
  std::vector<BasicCell> cells_;
  std::vector<std::vector<int>> adjacency_;
  Eigen::VectorXd u_;
  Eigen::VectorXd v_;
  double tolerance_ = 0.0;
};

}  // namespace

OtResult ot_solve(const CostMatrix& cost, const Eigen::VectorXd& source_weights,
                  const Eigen::VectorXd& target_weights) {
  const auto m = cost.rows();
  const auto k = cost.cols();
  if (m < 1 || k < 1) throw DimensionError("ot_solve: empty cost matrix");
  if (source_weights.size() != m || target_weights.size() != k) {
    throw DimensionError("ot_solve: weight lengths do not match the cost matrix shape");
  }
  if (cost.hasNaN() || !cost.allFinite()) throw InvalidInput("ot_solve: cost matrix has NaN or infinite entries");
  validate_weights(source_weights, "ot_solve source");
  validate_weights(target_weights, "ot_solve target");
  if (std::abs(source_weights.sum() - target_weights.sum()) > kWeightTolerance) {
    throw InvalidInput("ot_solve: source and target weights carry different total mass");
  }

  Eigen::VectorXd supply = source_weights.array() + kSupplyPerturbation;
  Eigen::VectorXd demand = target_weights;
  demand[k - 1] += kSupplyPerturbation * static_cast<double>(m);

  TransportationSimplex simplex(cost, supply, demand);
  simplex.solve();
  const std::vector<BasicCell> basic = simplex.basic_solution(source_weights, target_weights);

  // Sparse hygiene: drop tiny entries, fold their mass into the largest kept entry of the row.
  OtResult result;
  result.plan.rows = static_cast<int>(m);
  result.plan.cols = static_cast<int>(k);
  std::vector<double> residual(static_cast<std::size_t>(m), 0.0);
  for (const auto& cell : basic) {
    if (cell.mass < kDropBelow) {
      residual[cell.row] += cell.mass;
    } else {
      result.plan.entries.push_back({cell.row, cell.col, cell.mass});
    }
  }
  std::sort(result.plan.entries.begin(), result.plan.entries.end(),
            [](const PlanEntry& a, const PlanEntry& b) { return std::tie(a.row, a.col) < std::tie(b.row, b.col); });
  std::vector<int> largest(static_cast<std::size_t>(m), -1);
  for (std::size_t e = 0; e < result.plan.entries.size(); ++e) {
    const int row = result.plan.entries[e].row;
    if (largest[row] < 0 || result.plan.entries[e].mass > result.plan.entries[largest[row]].mass) {
      largest[row] = static_cast<int>(e);
    }
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (residual[i] != 0.0 && largest[i] >= 0) result.plan.entries[largest[i]].mass += residual[i];
  }
  result.cost = plan_cost(cost, result.plan);
  return result;
}

bool validate_plan(const TransportPlan& plan, const Eigen::VectorXd& source_weights,
                   const Eigen::VectorXd& target_weights, double tol) {
  if (plan.rows != source_weights.size() || plan.cols != target_weights.size()) return false;
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(plan.rows);
  Eigen::VectorXd cols = Eigen::VectorXd::Zero(plan.cols);
  for (const auto& e : plan.entries) {
    if (e.row < 0 || e.row >= plan.rows || e.col < 0 || e.col >= plan.cols) return false;
    if (!std::isfinite(e.mass) || e.mass < 0.0) return false;
    rows[e.row] += e.mass;
    cols[e.col] += e.mass;
  }
  return (rows - source_weights).cwiseAbs().maxCoeff() <= tol &&
         (cols - target_weights).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace mad
