#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mad {

/// Raised when array shapes or feature dimensions disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for inputs that violate a documented precondition (weights, labels, paths).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a solver cannot produce a result.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by file readers on malformed content.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kWeightTolerance = 1e-9;

/// One series: T rows (timestamps) by q columns (features).
template <typename Scalar>
using SeriesT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Series = SeriesT<double>;

/// Dense cost matrix; T x T' for alignment problems, n x n' for transport problems.
using CostMatrix = Eigen::MatrixXd;

enum class FrameMetric { Euclidean, SquaredEuclidean };

FrameMetric parse_metric(const std::string& name);
std::string to_string(FrameMetric metric);

/// Distance between two feature vectors of equal length.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar frame_cost(const Eigen::MatrixBase<DerivedA>& a,
                                     const Eigen::MatrixBase<DerivedB>& b,
                                     FrameMetric metric = FrameMetric::Euclidean) {
  if (a.size() != b.size()) {
    throw DimensionError("frame_cost: vectors of length " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  }
  using Scalar = typename DerivedA::Scalar;
  Scalar sq(0);
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const Scalar diff = a.coeff(k) - b.coeff(k);
    sq += diff * diff;
  }
  return metric == FrameMetric::SquaredEuclidean ? sq : std::sqrt(sq);
}

/// Slice (i, j) of the pairwise timestamp cost tensor: entry (s, t) = d(x_s, x'_t).
template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> pairwise_frame_cost_slice(
    const Eigen::MatrixBase<DerivedA>& x, const Eigen::MatrixBase<DerivedB>& y,
    FrameMetric metric = FrameMetric::Euclidean) {
  if (x.cols() != y.cols()) {
    throw DimensionError("pairwise_frame_cost_slice: feature dimensions " + std::to_string(x.cols()) +
                         " and " + std::to_string(y.cols()));
  }
  Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(x.rows(), y.rows());
  for (Eigen::Index s = 0; s < x.rows(); ++s) {
    for (Eigen::Index t = 0; t < y.rows(); ++t) {
      out(s, t) = frame_cost(x.row(s), y.row(t), metric);
    }
  }
  return out;
}

/// n series sharing length T and feature count q, with sample weights and optional labels.
struct TimeSeriesDataset {
  std::vector<Series> series;
  Eigen::VectorXd weights;
  std::optional<std::vector<int>> labels;

  TimeSeriesDataset() = default;
  TimeSeriesDataset(std::vector<Series> values, Eigen::VectorXd w,
                    std::optional<std::vector<int>> y = std::nullopt);

  /// Uniform weights 1/n.
  static TimeSeriesDataset uniform(std::vector<Series> values,
                                   std::optional<std::vector<int>> y = std::nullopt);

  [[nodiscard]] std::size_t size() const { return series.size(); }
  [[nodiscard]] Eigen::Index length() const { return series.empty() ? 0 : series.front().rows(); }
  [[nodiscard]] Eigen::Index dim() const { return series.empty() ? 0 : series.front().cols(); }
  [[nodiscard]] bool has_labels() const { return labels.has_value(); }
  /// 1 + largest label, or 1 when unlabeled.
  [[nodiscard]] int num_classes() const;

  /// Throws unless shapes agree, weights are a probability vector and labels are non-negative.
  void validate() const;
  /// Throws InvalidInput naming the first class id in [0, num_classes) with no series.
  void require_all_classes_present() const;
  /// Rescales weights to sum to one. Only ever called explicitly.
  void renormalize_weights();
};

/// Throws unless w is non-negative and sums to one within kWeightTolerance.
void validate_weights(const Eigen::VectorXd& w, const std::string& what);

/// Admissible DTW alignment stored as its ordered cells.
struct WarpingPath {
  std::vector<std::pair<int, int>> steps;

  [[nodiscard]] bool is_valid(int rows, int cols) const;
  /// Throws InvalidInput when is_valid fails.
  void require_valid(int rows, int cols) const;
  /// Binary rows x cols matrix with ones on the path cells.
  [[nodiscard]] Eigen::MatrixXd to_matrix(int rows, int cols) const;
  /// Mean of (t - s) over the path cells; positive when the path runs above the diagonal.
  [[nodiscard]] double midpoint_offset() const;

  /// Nearest-integer diagonal from (0,0) to (rows-1, cols-1).
  static WarpingPath diagonal(int rows, int cols);

  bool operator==(const WarpingPath&) const = default;
};

/// Sum of cost entries along the path cells.
double path_cost(const CostMatrix& cost, const WarpingPath& path);

struct PlanEntry {
  int row;
  int col;
  double mass;
  bool operator==(const PlanEntry&) const = default;
};

/// Sparse coupling between n source and n' target samples.
struct TransportPlan {
  int rows = 0;
  int cols = 0;
  std::vector<PlanEntry> entries;

  [[nodiscard]] Eigen::MatrixXd to_dense() const;
  [[nodiscard]] std::size_t nonzeros() const { return entries.size(); }
  [[nodiscard]] double total_mass() const;
  static TransportPlan from_dense(const Eigen::MatrixXd& dense, double drop_below = 0.0);
};

/// <C, gamma> summed over the plan's stored entries.
double plan_cost(const CostMatrix& cost, const TransportPlan& plan);

/// Upper bound on worker threads used by parallel_for. 0 means "use the MAD_THREADS
/// environment variable, else hardware concurrency".
void set_thread_limit(unsigned threads);
unsigned thread_limit();

/// Calls fn(k) for k in [0, count). Each index is visited exactly once, so results written
/// to per-index slots are independent of scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace mad
