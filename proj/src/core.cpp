#include "mad/core.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>

namespace mad {

FrameMetric parse_metric(const std::string& name) {
  if (name == "euclidean") return FrameMetric::Euclidean;
  if (name == "sqeuclidean" || name == "squared_euclidean") return FrameMetric::SquaredEuclidean;
  throw InvalidInput("unknown metric '" + name + "' (expected euclidean or sqeuclidean)");
}

std::string to_string(FrameMetric metric) {
  return metric == FrameMetric::Euclidean ? "euclidean" : "sqeuclidean";
}

TimeSeriesDataset::TimeSeriesDataset(std::vector<Series> values, Eigen::VectorXd w,
                                     std::optional<std::vector<int>> y)
    : series(std::move(values)), weights(std::move(w)), labels(std::move(y)) {
  validate();
}

TimeSeriesDataset TimeSeriesDataset::uniform(std::vector<Series> values,
                                             std::optional<std::vector<int>> y) {
  const auto n = static_cast<Eigen::Index>(values.size());
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, n > 0 ? 1.0 / static_cast<double>(n) : 0.0);
  return {std::move(values), std::move(w), std::move(y)};
}

int TimeSeriesDataset::num_classes() const {
  if (!labels || labels->empty()) return 1;
  return *std::max_element(labels->begin(), labels->end()) + 1;
}

void validate_weights(const Eigen::VectorXd& w, const std::string& what) {
  if (w.size() == 0) throw InvalidInput(what + ": empty weight vector");
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i]) || w[i] < 0.0) {
      throw InvalidInput(what + ": weight " + std::to_string(i) + " is negative or non-finite");
    }
  }
  if (std::abs(w.sum() - 1.0) > kWeightTolerance) {
    throw InvalidInput(what + ": weights sum to " + std::to_string(w.sum()) + ", expected 1");
  }
}

void TimeSeriesDataset::validate() const {
  if (series.empty()) throw InvalidInput("dataset has no series");
  const auto T = series.front().rows();
  const auto q = series.front().cols();
  if (T < 1 || q < 1) throw DimensionError("dataset series must have T >= 1 and q >= 1");
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].rows() != T) {
      throw DimensionError("series " + std::to_string(i) + " has length " +
                           std::to_string(series[i].rows()) + ", expected " + std::to_string(T));
    }
    if (series[i].cols() != q) {
      throw DimensionError("series " + std::to_string(i) + " has " + std::to_string(series[i].cols()) +
                           " features, expected " + std::to_string(q));
    }
    if (!series[i].allFinite()) throw InvalidInput("series " + std::to_string(i) + " has non-finite values");
  }
  if (static_cast<std::size_t>(weights.size()) != series.size()) {
    throw DimensionError("weights length " + std::to_string(weights.size()) + " does not match " +
                         std::to_string(series.size()) + " series");
  }
  validate_weights(weights, "dataset");
  if (labels) {
    if (labels->size() != series.size()) throw DimensionError("labels length does not match series count");
    for (int y : *labels) {
      if (y < 0) throw InvalidInput("negative class label " + std::to_string(y));
    }
  }
}

void TimeSeriesDataset::require_all_classes_present() const {
  if (!labels) throw InvalidInput("dataset has no labels");
  std::vector<int> counts(static_cast<std::size_t>(num_classes()), 0);
  for (int y : *labels) ++counts[static_cast<std::size_t>(y)];
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) throw InvalidInput("class " + std::to_string(c) + " has no series");
  }
}

void TimeSeriesDataset::renormalize_weights() {
  const double total = weights.sum();
  if (!(total > 0.0)) throw InvalidInput("cannot renormalize weights with non-positive sum");
  weights /= total;
}

bool WarpingPath::is_valid(int rows, int cols) const {
  if (rows < 1 || cols < 1 || steps.empty()) return false;
  if (steps.front() != std::pair{0, 0} || steps.back() != std::pair{rows - 1, cols - 1}) return false;
  for (std::size_t k = 1; k < steps.size(); ++k) {
    const int ds = steps[k].first - steps[k - 1].first;
    const int dt = steps[k].second - steps[k - 1].second;
    if (ds < 0 || ds > 1 || dt < 0 || dt > 1 || (ds == 0 && dt == 0)) return false;
  }
  return true;
}

void WarpingPath::require_valid(int rows, int cols) const {
  if (!is_valid(rows, cols)) {
    throw InvalidInput("warping path is not admissible for a " + std::to_string(rows) + "x" +
                       std::to_string(cols) + " alignment");
  }
}

Eigen::MatrixXd WarpingPath::to_matrix(int rows, int cols) const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
  for (const auto& [s, t] : steps) m(s, t) = 1.0;
  return m;
}

double WarpingPath::midpoint_offset() const {
  if (steps.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& [s, t] : steps) acc += static_cast<double>(t - s);
  return acc / static_cast<double>(steps.size());
}

WarpingPath WarpingPath::diagonal(int rows, int cols) {
  if (rows < 1 || cols < 1) throw DimensionError("diagonal path needs positive sizes");
  WarpingPath path;
  const int longest = std::max(rows, cols);
  if (longest == 1) {
    path.steps.emplace_back(0, 0);
    return path;
  }
  path.steps.reserve(static_cast<std::size_t>(longest));
  for (int k = 0; k < longest; ++k) {
    const double frac = static_cast<double>(k) / static_cast<double>(longest - 1);
    path.steps.emplace_back(static_cast<int>(std::lround(frac * (rows - 1))),
                            static_cast<int>(std::lround(frac * (cols - 1))));
  }
  return path;
}

double path_cost(const CostMatrix& cost, const WarpingPath& path) {
  double acc = 0.0;
  for (const auto& [s, t] : path.steps) acc += cost(s, t);
  return acc;
}

Eigen::MatrixXd TransportPlan::to_dense() const {
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(rows, cols);
  for (const auto& e : entries) dense(e.row, e.col) += e.mass;
  return dense;
}

double TransportPlan::total_mass() const {
  double acc = 0.0;
  for (const auto& e : entries) acc += e.mass;
  return acc;
}

TransportPlan TransportPlan::from_dense(const Eigen::MatrixXd& dense, double drop_below) {
  TransportPlan plan;
  plan.rows = static_cast<int>(dense.rows());
  plan.cols = static_cast<int>(dense.cols());
  for (int i = 0; i < plan.rows; ++i) {
    for (int j = 0; j < plan.cols; ++j) {
      if (dense(i, j) > drop_below) plan.entries.push_back({i, j, dense(i, j)});
    }
  }
  return plan;
}

double plan_cost(const CostMatrix& cost, const TransportPlan& plan) {
  if (cost.rows() != plan.rows || cost.cols() != plan.cols) {
    throw DimensionError("plan_cost: cost matrix and plan shapes differ");
  }
  double acc = 0.0;
  for (const auto& e : plan.entries) acc += cost(e.row, e.col) * e.mass;
  return acc;
}

namespace {
std::atomic<unsigned> g_thread_limit{0};
thread_local bool t_inside_parallel = false;
}

void set_thread_limit(unsigned threads) { g_thread_limit = threads; }

unsigned thread_limit() {
  if (const unsigned explicit_limit = g_thread_limit.load(); explicit_limit > 0) return explicit_limit;
  if (const char* env = std::getenv("MAD_THREADS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    if (parsed > 0) return static_cast<unsigned>(parsed);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(thread_limit(), count);
  if (workers <= 1 || t_inside_parallel) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    t_inside_parallel = true;
    for (std::size_t k = next++; k < count && !failed; k = next++) {
      try {
        fn(k);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  t_inside_parallel = false;
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace mad
