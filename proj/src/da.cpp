#include "mad/da.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace mad {

namespace {

constexpr double kProbFloor = 1e-12;
constexpr double kProbCeil = 1.0 - 1e-12;
constexpr int kMaxBatchResamples = 100;

// Im2col: row t holds x(t + k - pad, i) at column i * width + k, zero outside the series.
Eigen::MatrixXd patches(const Series& x, int width) {
  const auto T = x.rows();
  const auto q = x.cols();
  const int pad = (width - 1) / 2;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(T, q * width);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int k = 0; k < width; ++k) {
      const Eigen::Index src = t + k - pad;
      if (src < 0 || src >= T) continue;
      for (Eigen::Index i = 0; i < q; ++i) p(t, i * width + k) = x(src, i);
    }
  }
  return p;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const Eigen::VectorXd shifted = (logits.array() - logits.maxCoeff()).exp();
  return shifted / shifted.sum();
}

// Forward state kept for the backward pass.
struct Activations {
  Eigen::MatrixXd patches;
  Eigen::MatrixXd pre;
  Eigen::MatrixXd embedding;
  Eigen::VectorXd pooled;
  Eigen::VectorXd probs;
};

Activations forward(const ToyModel& model, const Series& x) {
  Activations a;
  a.patches = patches(x, model.kernel_width);
  a.pre = a.patches * model.conv.transpose();
  a.embedding = a.pre.cwiseMax(0.0);
  a.pooled = a.embedding.colwise().mean().transpose();
  a.probs = softmax(model.classifier * a.pooled + model.bias);
  return a;
}

// d(-log clamp(p_y)) / d logits; zero where the clamp is active.
Eigen::VectorXd cross_entropy_logit_grad(const Eigen::VectorXd& probs, int label) {
  const double p = probs[label];
  if (p <= kProbFloor || p >= kProbCeil) return Eigen::VectorXd::Zero(probs.size());
  Eigen::VectorXd g = probs;
  g[label] -= 1.0;
  return g;
}

void check_labels(const ToyModel& model, const TimeSeriesDataset& source) {
  if (!source.labels) throw InvalidInput("source dataset must be labelled");
  for (int y : *source.labels) {
    if (y < 0 || y >= model.num_classes) throw InvalidInput("label " + std::to_string(y) + " out of range");
  }
}

void check_inputs(const ToyModel& model, const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                  const TransportPlan& plan) {
  model.validate();
  check_labels(model, source);
  if (source.dim() != model.input_dim || target.dim() != model.input_dim) {
    throw DimensionError("series feature dimension does not match the model");
  }
  if (plan.rows != static_cast<int>(source.size()) || plan.cols != static_cast<int>(target.size())) {
    throw DimensionError("plan shape does not match the batches");
  }
}

// Shared by the value-only and gradient paths so both evaluate the same expression.
double composite_loss(const ToyModel& model, const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                      const TransportPlan& plan, const ClassPaths& paths, double alpha, double beta,
                      FrameMetric metric, ToyModel* gradient) {
  check_inputs(model, source, target, plan);
  const auto& labels = *source.labels;
  const auto n = source.size();
  std::vector<Activations> src(n), tgt(target.size());
  for (std::size_t i = 0; i < n; ++i) src[i] = forward(model, source.series[i]);
  for (std::size_t j = 0; j < target.size(); ++j) tgt[j] = forward(model, target.series[j]);

  const auto C = model.num_classes;
  const auto e = model.embedding_width;
  std::vector<Eigen::VectorXd> src_logit_grad(n, Eigen::VectorXd::Zero(C));
  std::vector<Eigen::VectorXd> tgt_logit_grad(target.size(), Eigen::VectorXd::Zero(C));
  std::vector<Eigen::MatrixXd> src_embed_grad, tgt_embed_grad;
  if (gradient) {
    for (const auto& a : src) src_embed_grad.push_back(Eigen::MatrixXd::Zero(a.embedding.rows(), e));
    for (const auto& a : tgt) tgt_embed_grad.push_back(Eigen::MatrixXd::Zero(a.embedding.rows(), e));
  }

  double source_term = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    source_term += clamped_cross_entropy(src[i].probs, labels[i]);
    if (gradient) src_logit_grad[i] += inv_n * cross_entropy_logit_grad(src[i].probs, labels[i]);
  }
  source_term *= inv_n;

  double coupling_term = 0.0;
  for (const auto& entry : plan.entries) {
    const int i = entry.row;
    const int j = entry.col;
    const double mass = entry.mass;
    double aligned = 0.0;
    if (alpha != 0.0) {
      const auto it = paths.find(labels[i]);
      if (it == paths.end()) throw InvalidInput("no warping path for class " + std::to_string(labels[i]));
      const auto& hs = src[i].embedding;
      const auto& ht = tgt[j].embedding;
      for (const auto& [s, t] : it->second.steps) {
        const Eigen::RowVectorXd diff = hs.row(s) - ht.row(t);
        const double sq = diff.squaredNorm();
        if (metric == FrameMetric::SquaredEuclidean) {
          aligned += sq;
          if (gradient) {
            src_embed_grad[i].row(s) += (2.0 * alpha * mass) * diff;
            tgt_embed_grad[j].row(t) -= (2.0 * alpha * mass) * diff;
          }
        } else {
          const double dist = std::sqrt(sq);
          aligned += dist;
          if (gradient && dist > 0.0) {
            src_embed_grad[i].row(s) += (alpha * mass / dist) * diff;
            tgt_embed_grad[j].row(t) -= (alpha * mass / dist) * diff;
          }
        }
      }
    }
    double cross = 0.0;
    if (beta != 0.0) {
      cross = clamped_cross_entropy(tgt[j].probs, labels[i]);
      if (gradient) tgt_logit_grad[j] += (beta * mass) * cross_entropy_logit_grad(tgt[j].probs, labels[i]);
    }
    coupling_term += mass * (alpha * aligned + beta * cross);
  }

  if (gradient) {
    *gradient = ToyModel::zeros(model.input_dim, e, model.kernel_width, C);
    auto backprop = [&](const Activations& a, const Eigen::VectorXd& g_logits, Eigen::MatrixXd& g_embed) {
      gradient->classifier.noalias() += g_logits * a.pooled.transpose();
      gradient->bias += g_logits;
      const Eigen::VectorXd g_pooled = model.classifier.transpose() * g_logits;
      g_embed.rowwise() += g_pooled.transpose() / static_cast<double>(a.embedding.rows());
      const Eigen::MatrixXd g_pre = (a.pre.array() > 0.0).select(g_embed.array(), 0.0).matrix();
      gradient->conv.noalias() += g_pre.transpose() * a.patches;
    };
    for (std::size_t i = 0; i < n; ++i) backprop(src[i], src_logit_grad[i], src_embed_grad[i]);
    for (std::size_t j = 0; j < target.size(); ++j) backprop(tgt[j], tgt_logit_grad[j], tgt_embed_grad[j]);
  }
  return source_term + coupling_term;
}

}  // namespace

ToyModel ToyModel::zeros(int input_dim, int embedding_width, int kernel_width, int num_classes) {
  ToyModel m;
  m.input_dim = input_dim;
  m.embedding_width = embedding_width;
  m.kernel_width = kernel_width;
  m.num_classes = num_classes;
  m.validate_shape_args();
  m.conv = Eigen::MatrixXd::Zero(embedding_width, input_dim * kernel_width);
  m.classifier = Eigen::MatrixXd::Zero(num_classes, embedding_width);
  m.bias = Eigen::VectorXd::Zero(num_classes);
  return m;
}

ToyModel ToyModel::random(int input_dim, int embedding_width, int kernel_width, int num_classes,
                          std::uint64_t seed) {
  ToyModel m = zeros(input_dim, embedding_width, kernel_width, num_classes);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> conv_init(0.0, 1.0 / std::sqrt(static_cast<double>(input_dim * kernel_width)));
  std::normal_distribution<double> head_init(0.0, 1.0 / std::sqrt(static_cast<double>(embedding_width)));
  for (Eigen::Index k = 0; k < m.conv.size(); ++k) m.conv.data()[k] = conv_init(rng);
  for (Eigen::Index k = 0; k < m.classifier.size(); ++k) m.classifier.data()[k] = head_init(rng);
  return m;
}

void ToyModel::validate_shape_args() const {
  if (input_dim < 1 || embedding_width < 1 || kernel_width < 1 || num_classes < 1) {
    throw InvalidInput("model dimensions must be positive");
  }
}

void ToyModel::validate() const {
  validate_shape_args();
  if (conv.rows() != embedding_width || conv.cols() != input_dim * kernel_width ||
      classifier.rows() != num_classes || classifier.cols() != embedding_width || bias.size() != num_classes) {
    throw DimensionError("model parameter shapes are inconsistent");
  }
}

Eigen::Index ToyModel::parameter_count() const { return conv.size() + classifier.size() + bias.size(); }

Eigen::VectorXd ToyModel::flatten() const {
  Eigen::VectorXd flat(parameter_count());
  flat << conv.reshaped(), classifier.reshaped(), bias;
  return flat;
}

void ToyModel::unflatten(const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count()) throw DimensionError("flat parameter vector has the wrong length");
  Eigen::Index offset = 0;
  conv.reshaped() = flat.segment(offset, conv.size());
  offset += conv.size();
  classifier.reshaped() = flat.segment(offset, classifier.size());
  offset += classifier.size();
  bias = flat.segment(offset, bias.size());
}

Eigen::MatrixXd forward_embed(const ToyModel& model, const Series& series) {
  model.validate();
  if (series.cols() != model.input_dim) {
    throw DimensionError("series has " + std::to_string(series.cols()) + " features, model expects " +
                         std::to_string(model.input_dim));
  }
  return (patches(series, model.kernel_width) * model.conv.transpose()).cwiseMax(0.0);
}

Eigen::VectorXd forward_classify(const ToyModel& model, const Eigen::MatrixXd& embedding) {
  if (embedding.cols() != model.embedding_width || embedding.rows() < 1) {
    throw DimensionError("embedding shape does not match the model");
  }
  const Eigen::VectorXd pooled = embedding.colwise().mean().transpose();
  return softmax(model.classifier * pooled + model.bias);
}

std::vector<int> predict(const ToyModel& model, const TimeSeriesDataset& dataset) {
  std::vector<int> out;
  out.reserve(dataset.size());
  for (const auto& x : dataset.series) {
    Eigen::Index best = 0;
    forward_classify(model, forward_embed(model, x)).maxCoeff(&best);
    out.push_back(static_cast<int>(best));
  }
  return out;
}

double accuracy(const ToyModel& model, const TimeSeriesDataset& dataset) {
  if (!dataset.labels) throw InvalidInput("accuracy needs a labelled dataset");
  const auto predicted = predict(model, dataset);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == (*dataset.labels)[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double clamped_cross_entropy(const Eigen::VectorXd& probabilities, int label) {
  if (label < 0 || label >= probabilities.size()) throw InvalidInput("label " + std::to_string(label) + " out of range");
  return -std::log(std::clamp(probabilities[label], kProbFloor, kProbCeil));
}

double loss_eq8(const ToyModel& model, const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                const TransportPlan& plan, const ClassPaths& paths, double alpha, double beta, FrameMetric metric) {
  return composite_loss(model, source, target, plan, paths, alpha, beta, metric, nullptr);
}

LossAndGradient loss_eq8_gradient(const ToyModel& model, const TimeSeriesDataset& source,
                                  const TimeSeriesDataset& target, const TransportPlan& plan,
                                  const ClassPaths& paths, double alpha, double beta, FrameMetric metric) {
  LossAndGradient out;
  out.loss = composite_loss(model, source, target, plan, paths, alpha, beta, metric, &out.gradient);
  return out;
}

double gradient_check(const ToyModel& model, const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                      const TransportPlan& plan, const ClassPaths& paths, double alpha, double beta,
                      FrameMetric metric, double step) {
  const Eigen::VectorXd analytic =
      loss_eq8_gradient(model, source, target, plan, paths, alpha, beta, metric).gradient.flatten();
  const Eigen::VectorXd base = model.flatten();
  ToyModel probe = model;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < base.size(); ++k) {
    Eigen::VectorXd shifted = base;
    shifted[k] = base[k] + step;
    probe.unflatten(shifted);
    const double up = loss_eq8(probe, source, target, plan, paths, alpha, beta, metric);
    shifted[k] = base[k] - step;
    probe.unflatten(shifted);
    const double down = loss_eq8(probe, source, target, plan, paths, alpha, beta, metric);
    const double numeric = (up - down) / (2.0 * step);
    worst = std::max(worst, std::abs(analytic[k] - numeric) / std::max(1.0, std::abs(numeric)));
  }
  return worst;
}

void TrainConfig::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw InvalidInput("alpha and beta must be non-negative");
  if (!(learning_rate > 0.0)) throw InvalidInput("learning rate must be positive");
  if (batch_size < 1 || epochs < 0) throw InvalidInput("batch size must be positive and epochs non-negative");
  if (embedding_width < 1 || kernel_width < 1) throw InvalidInput("model sizes must be positive");
  if (max_bcd_iterations < 1) throw InvalidInput("max_bcd_iterations must be at least 1");
  if (first_batch_restarts < 1) throw InvalidInput("first_batch_restarts must be at least 1");
}

namespace {

TimeSeriesDataset subset(const TimeSeriesDataset& data, const std::vector<std::size_t>& idx, Eigen::VectorXd weights) {
  std::vector<Series> values;
  std::optional<std::vector<int>> labels;
  if (data.labels) labels.emplace();
  for (std::size_t k : idx) {
    values.push_back(data.series[k]);
    if (labels) labels->push_back((*data.labels)[k]);
  }
  TimeSeriesDataset out;
  out.series = std::move(values);
  out.weights = std::move(weights);
  out.labels = std::move(labels);
  return out;
}

std::vector<std::size_t> draw_without_replacement(std::size_t population, std::size_t count, std::mt19937_64& rng) {
  std::vector<std::size_t> all(population);
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(std::min(count, population));
  return all;
}

bool covers_all_classes(const TimeSeriesDataset& data, const std::vector<std::size_t>& idx, int classes) {
  std::vector<char> seen(static_cast<std::size_t>(classes), 0);
  for (std::size_t k : idx) seen[static_cast<std::size_t>((*data.labels)[k])] = 1;
  return std::all_of(seen.begin(), seen.end(), [](char s) { return s != 0; });
}

Eigen::VectorXd class_frequencies(const TimeSeriesDataset& data, int classes) {
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(classes);
  for (int y : *data.labels) freq[y] += 1.0;
  return freq / static_cast<double>(data.size());
}

TrainResult run_training(ToyModel model, const TimeSeriesDataset& source, const TimeSeriesDataset* target,
                         const TrainConfig& cfg, bool adapt) {
  cfg.validate();
  model.validate();
  check_labels(model, source);
  if (source.dim() != model.input_dim) throw DimensionError("source feature dimension does not match the model");
  if (target && target->dim() != model.input_dim) throw DimensionError("target feature dimension does not match the model");
  const int classes = model.num_classes;

  Eigen::VectorXd proportions = cfg.target_class_proportions.value_or(class_frequencies(source, classes));
  if (proportions.size() != classes) throw DimensionError("target class proportions need one entry per class");
  validate_weights(proportions, "target class proportions");

  // Independent streams so that source sampling does not depend on whether targets are drawn.
  std::mt19937_64 source_rng(cfg.seed);
  std::mt19937_64 target_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 path_rng(cfg.seed ^ 0xc2b2ae3d27d4eb4fULL);

  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t batches_per_epoch = std::max<std::size_t>(1, source.size() / batch);

  TrainResult result;
  ClassPaths paths;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(source.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), source_rng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      std::vector<std::size_t> src_idx(order.begin() + static_cast<std::ptrdiff_t>(b * batch),
                                       order.begin() + static_cast<std::ptrdiff_t>(std::min(source.size(), (b + 1) * batch)));
      TransportPlan plan;
      std::vector<std::size_t> tgt_idx;
      Eigen::VectorXd src_weights = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(src_idx.size()),
                                                              1.0 / static_cast<double>(src_idx.size()));
      if (adapt) {
        int attempts = 0;
        while (!covers_all_classes(source, src_idx, classes)) {
          if (++attempts > kMaxBatchResamples) throw SolverError("could not draw a minibatch covering every class");
          src_idx = draw_without_replacement(source.size(), batch, source_rng);
        }
        std::vector<int> counts(static_cast<std::size_t>(classes), 0);
        for (std::size_t k : src_idx) ++counts[static_cast<std::size_t>((*source.labels)[k])];
        for (std::size_t k = 0; k < src_idx.size(); ++k) {
          const int y = (*source.labels)[src_idx[k]];
          src_weights[static_cast<Eigen::Index>(k)] = proportions[y] / counts[static_cast<std::size_t>(y)];
        }
        src_weights /= src_weights.sum();
        tgt_idx = draw_without_replacement(target->size(), batch, target_rng);
      }
      TimeSeriesDataset src_batch = subset(source, src_idx, src_weights);
      TimeSeriesDataset tgt_batch;
      if (adapt) {
        tgt_batch = subset(*target, tgt_idx,
                           Eigen::VectorXd::Constant(static_cast<Eigen::Index>(tgt_idx.size()), 1.0 / static_cast<double>(tgt_idx.size())));
        tgt_batch.labels.reset();

        std::vector<Series> src_embed, tgt_embed;
        for (const auto& x : src_batch.series) src_embed.push_back(forward_embed(model, x));
        for (const auto& x : tgt_batch.series) tgt_embed.push_back(forward_embed(model, x));
        OtCostAugmentation aug;
        aug.path_scale = cfg.alpha;
        aug.additive = CostMatrix::Zero(static_cast<Eigen::Index>(src_idx.size()), static_cast<Eigen::Index>(tgt_idx.size()));
        if (cfg.beta != 0.0) {
          for (std::size_t j = 0; j < tgt_embed.size(); ++j) {
            const Eigen::VectorXd probs = forward_classify(model, tgt_embed[j]);
            for (std::size_t i = 0; i < src_idx.size(); ++i) {
              aug.additive(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                  cfg.beta * clamped_cross_entropy(probs, (*src_batch.labels)[i]);
            }
          }
        }
        TimeSeriesDataset src_embedded(std::move(src_embed), src_batch.weights, src_batch.labels);
        TimeSeriesDataset tgt_embedded(std::move(tgt_embed), tgt_batch.weights);
        MadConfig mad;
        mad.metric = cfg.metric;
        mad.max_iterations = cfg.max_bcd_iterations;
        if (paths.empty()) {
          mad.init = PathInit::Random;
          mad.seed = path_rng();
          mad.restarts = cfg.first_batch_restarts;
        } else {
          mad.init = PathInit::Given;
          mad.given_paths = paths;
        }
        MadSolution coupling = cmad_solve(src_embedded, tgt_embedded, *src_batch.labels, mad, aug);
        plan = std::move(coupling.plan);
        paths = std::move(coupling.paths);
      } else {
        tgt_batch = src_batch;
        plan.rows = static_cast<int>(src_idx.size());
        plan.cols = static_cast<int>(src_idx.size());
      }

      const double alpha = adapt ? cfg.alpha : 0.0;
      const double beta = adapt ? cfg.beta : 0.0;
      LossAndGradient lg = loss_eq8_gradient(model, src_batch, tgt_batch, plan, paths, alpha, beta, cfg.metric);
      loss_sum += lg.loss;
      model.conv -= cfg.learning_rate * lg.gradient.conv;
      model.classifier -= cfg.learning_rate * lg.gradient.classifier;
      model.bias -= cfg.learning_rate * lg.gradient.bias;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(batches_per_epoch);
    rec.source_acc = accuracy(model, source);
    rec.target_acc = (target && target->labels) ? accuracy(model, *target) : std::numeric_limits<double>::quiet_NaN();
    result.history.push_back(rec);
  }
  result.model = std::move(model);
  result.last_paths = std::move(paths);
  return result;
}

}  // namespace

TrainResult train(ToyModel model, const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                  const TrainConfig& config) {
  const bool adapt = config.alpha != 0.0 || config.beta != 0.0;
  return run_training(std::move(model), source, &target, config, adapt);
}

TrainResult train_source_only(ToyModel model, const TimeSeriesDataset& source, const TimeSeriesDataset* eval_target,
                              const TrainConfig& config) {
  return run_training(std::move(model), source, eval_target, config, false);
}

}  // namespace mad
