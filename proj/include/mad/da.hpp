#pragma once

#include "mad/core.hpp"
#include "mad/solver.hpp"

#include <cstdint>

namespace mad {

/// One temporal convolution (same padding, ReLU) followed by global average pooling and a
/// linear softmax classifier.
///
/// `conv` is e x (q * kernel_width); entry (o, i * kernel_width + k) is the weight of input
/// feature i at kernel tap k for output channel o. Tap k reads timestamp t + k - (kernel_width - 1) / 2.
struct ToyModel {
  int input_dim = 0;
  int embedding_width = 0;
  int kernel_width = 0;
  int num_classes = 0;
  Eigen::MatrixXd conv;
  Eigen::MatrixXd classifier;
  Eigen::VectorXd bias;

  static ToyModel zeros(int input_dim, int embedding_width, int kernel_width, int num_classes);
  /// Gaussian init scaled by fan-in; zero bias.
  static ToyModel random(int input_dim, int embedding_width, int kernel_width, int num_classes,
                         std::uint64_t seed);

  [[nodiscard]] Eigen::Index parameter_count() const;
  /// Parameters in the order conv, classifier, bias (column-major within each block).
  [[nodiscard]] Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& flat);
  void validate() const;
  void validate_shape_args() const;
};

/// T x e embedding g(x).
Eigen::MatrixXd forward_embed(const ToyModel& model, const Series& series);

/// softmax(W mean_t(embedding) + b).
Eigen::VectorXd forward_classify(const ToyModel& model, const Eigen::MatrixXd& embedding);

std::vector<int> predict(const ToyModel& model, const TimeSeriesDataset& dataset);
/// Fraction of series whose arg-max prediction equals the label; dataset must be labelled.
double accuracy(const ToyModel& model, const TimeSeriesDataset& dataset);

/// -log p_label with the probability clamped to [1e-12, 1 - 1e-12].
double clamped_cross_entropy(const Eigen::VectorXd& probabilities, int label);

struct LossAndGradient {
  double loss = 0.0;
  ToyModel gradient;
};

/// Composite domain-adaptation loss for a fixed coupling:
///   mean_i CE(y_i, f(g(x_i)))
///   + sum_ij gamma_ij (alpha sum_{(s,t) in path(y_i)} d(g(x_i)_s, g(x'_j)_t) + beta CE(y_i, f(g(x'_j)))).
double loss_eq8(const ToyModel& model, const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                const TransportPlan& plan, const ClassPaths& paths, double alpha, double beta,
                FrameMetric metric = FrameMetric::SquaredEuclidean);

/// loss_eq8 and its analytic gradient with respect to every model parameter.
LossAndGradient loss_eq8_gradient(const ToyModel& model, const TimeSeriesDataset& source,
                                  const TimeSeriesDataset& target, const TransportPlan& plan,
                                  const ClassPaths& paths, double alpha, double beta,
                                  FrameMetric metric = FrameMetric::SquaredEuclidean);

/// Max over parameters of |analytic - numeric| / max(1, |numeric|), numeric gradients by
/// central differences.
double gradient_check(const ToyModel& model, const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                      const TransportPlan& plan, const ClassPaths& paths, double alpha, double beta,
                      FrameMetric metric = FrameMetric::SquaredEuclidean, double step = 1e-5);

struct TrainConfig {
  double alpha = 0.01;
  double beta = 0.01;
  double learning_rate = 0.0001;
  int batch_size = 32;
  int epochs = 10;
  std::uint64_t seed = 0;
  FrameMetric metric = FrameMetric::SquaredEuclidean;
  int embedding_width = 8;
  int kernel_width = 3;
  int max_bcd_iterations = 50;
  /// Random-path BCD runs on the first minibatch; the lowest-cost coupling seeds the warm start.
  int first_batch_restarts = 10;
  /// Class proportions of the target domain; defaults to the source class frequencies.
  std::optional<Eigen::VectorXd> target_class_proportions;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double source_acc = 0.0;
  /// NaN when the target dataset carries no labels.
  double target_acc = 0.0;
};

struct TrainResult {
  ToyModel model;
  std::vector<EpochRecord> history;
  /// Paths of the last minibatch coupling (empty for source-only training).
  ClassPaths last_paths;
};

/// Minibatch training: per batch, embed both batches, solve the augmented |C|-MAD coupling on
/// the embeddings (random paths on the first batch, previous paths afterwards), then take one
/// SGD step on the composite loss with the coupling fixed. Target labels, when present, are
/// only read for the reported target accuracy.
TrainResult train(ToyModel model, const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                  const TrainConfig& config);

/// Source cross-entropy only. `eval_target` is used only for reporting.
TrainResult train_source_only(ToyModel model, const TimeSeriesDataset& source,
                              const TimeSeriesDataset* eval_target, const TrainConfig& config);

}  // namespace mad
