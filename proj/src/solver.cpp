#include "mad/solver.hpp"

#include <algorithm>
#include <random>

namespace mad {

PathInit parse_path_init(const std::string& name) {
  if (name == "diagonal") return PathInit::Diagonal;
  if (name == "random") return PathInit::Random;
  if (name == "given") return PathInit::Given;
  throw InvalidInput("unknown init '" + name + "' (expected diagonal or random)");
}

std::string to_string(PathInit init) {
  switch (init) {
    case PathInit::Diagonal: return "diagonal";
    case PathInit::Random: return "random";
    case PathInit::Given: return "given";
  }
  return "unknown";
}

namespace {

void check_pair(const TimeSeriesDataset& source, const TimeSeriesDataset& target, std::span<const int> labels) {
  if (source.series.empty() || target.series.empty()) throw InvalidInput("datasets must be non-empty");
  if (source.dim() != target.dim()) {
    throw DimensionError("source has " + std::to_string(source.dim()) + " features, target has " +
                         std::to_string(target.dim()));
  }
  if (labels.size() != source.size()) throw DimensionError("labels length does not match source size");
}

const WarpingPath& path_for(const ClassPaths& paths, int class_id) {
  const auto it = paths.find(class_id);
  if (it == paths.end()) throw InvalidInput("no warping path for class " + std::to_string(class_id));
  return it->second;
}

void check_paths(const ClassPaths& paths, std::span<const int> labels, int rows, int cols) {
  for (int y : labels) path_for(paths, y);
  for (const auto& [c, path] : paths) path.require_valid(rows, cols);
}

double aligned_pair_cost(const Series& x, const Series& y, const WarpingPath& path, FrameMetric metric) {
  double acc = 0.0;
  for (const auto& [s, t] : path.steps) acc += frame_cost(x.row(s), y.row(t), metric);
  return acc;
}

std::vector<int> class_ids(std::span<const int> labels) {
  std::vector<int> ids(labels.begin(), labels.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

struct BcdProblem {
  const TimeSeriesDataset& source;
  const TimeSeriesDataset& target;
  std::span<const int> labels;
  std::vector<int> classes;
  const MadConfig& config;
  const OtCostAugmentation* augmentation;
};

double objective(const BcdProblem& problem, const TransportPlan& plan, const ClassPaths& paths) {
  const double aligned =
      evaluate_total_cost(problem.source, problem.target, problem.labels, plan, paths, problem.config.metric);
  if (!problem.augmentation) return aligned;
  double value = problem.augmentation->path_scale * aligned;
  if (problem.augmentation->additive.size() > 0) value += plan_cost(problem.augmentation->additive, plan);
  return value;
}

MadSolution run_bcd(const BcdProblem& problem, ClassPaths paths) {
  const auto& cfg = problem.config;
  MadSolution sol;
  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    CostMatrix cost = ot_cost_from_paths(problem.source, problem.target, problem.labels, paths, cfg.metric);
    if (problem.augmentation) {
      cost *= problem.augmentation->path_scale;
      if (problem.augmentation->additive.size() > 0) {
        if (problem.augmentation->additive.rows() != cost.rows() ||
            problem.augmentation->additive.cols() != cost.cols()) {
          throw DimensionError("augmented transport cost has the wrong shape");
        }
        cost += problem.augmentation->additive;
      }
    }
    sol.plan = ot_solve(cost, problem.source.weights, problem.target.weights).plan;
    sol.cost_trace.push_back(objective(problem, sol.plan, paths));

    std::vector<WarpingPath> updated(problem.classes.size());
    parallel_for(problem.classes.size(), [&](std::size_t k) {
      const int c = problem.classes[k];
      const CostMatrix align =
          dtw_cost_from_plan(problem.source, problem.target, problem.labels, sol.plan, c, cfg.metric);
      const WarpingPath& current = paths.at(c);
      DtwResult best = dtw_solve(align);
      // Keep the current path on ties so convergence is not defeated by equal-cost optima.
      updated[k] = path_cost(align, current) <= best.cost ? current : std::move(best.path);
    });
    bool changed = false;
    for (std::size_t k = 0; k < problem.classes.size(); ++k) {
      auto& slot = paths.at(problem.classes[k]);
      if (!(slot == updated[k])) {
        changed = true;
        slot = std::move(updated[k]);
      }
    }
    sol.cost_trace.push_back(objective(problem, sol.plan, paths));
    sol.iterations = iter;
    if (!changed) {
      sol.converged = true;
      break;
    }
  }
  sol.paths = std::move(paths);
  sol.total_cost = sol.cost_trace.back();
  return sol;
}

ClassPaths initial_paths(const BcdProblem& problem, PathInit init, std::uint64_t seed) {
  const int rows = static_cast<int>(problem.source.length());
  const int cols = static_cast<int>(problem.target.length());
  ClassPaths paths;
  switch (init) {
    case PathInit::Diagonal:
      for (int c : problem.classes) paths[c] = WarpingPath::diagonal(rows, cols);
      break;
    case PathInit::Random: {
      std::mt19937_64 rng(seed);
      for (int c : problem.classes) paths[c] = random_path(rows, cols, rng);
      break;
    }
    case PathInit::Given:
      for (int c : problem.classes) paths[c] = path_for(problem.config.given_paths, c);
      break;
  }
  check_paths(paths, problem.labels, rows, cols);
  return paths;
}

MadSolution solve_with_restarts(const BcdProblem& problem) {
  const auto& cfg = problem.config;
  if (cfg.max_iterations < 1) throw InvalidInput("max_iterations must be at least 1");
  if (cfg.restarts < 1) throw InvalidInput("restarts must be at least 1");
  MadSolution best = run_bcd(problem, initial_paths(problem, cfg.init, cfg.seed));
  for (int run = 1; run < cfg.restarts; ++run) {
    MadSolution candidate =
        run_bcd(problem, initial_paths(problem, PathInit::Random, cfg.seed + static_cast<std::uint64_t>(run)));
    if (candidate.total_cost < best.total_cost) best = std::move(candidate);
  }
  return best;
}

}  // namespace

CostMatrix ot_cost_from_paths(const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                              std::span<const int> labels, const ClassPaths& paths, FrameMetric metric) {
  check_pair(source, target, labels);
  check_paths(paths, labels, static_cast<int>(source.length()), static_cast<int>(target.length()));
  CostMatrix cost(source.size(), target.size());
  parallel_for(source.size(), [&](std::size_t i) {
    const WarpingPath& path = paths.at(labels[i]);
    for (std::size_t j = 0; j < target.size(); ++j) {
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          aligned_pair_cost(source.series[i], target.series[j], path, metric);
    }
  });
  return cost;
}

CostMatrix dtw_cost_from_plan(const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                              std::span<const int> labels, const TransportPlan& plan, int class_id,
                              FrameMetric metric) {
  check_pair(source, target, labels);
  if (plan.rows != static_cast<int>(source.size()) || plan.cols != static_cast<int>(target.size())) {
    throw DimensionError("plan shape does not match the datasets");
  }
  if (std::find(labels.begin(), labels.end(), class_id) == labels.end()) {
    throw InvalidInput("class " + std::to_string(class_id) + " does not occur in the source labels");
  }
  CostMatrix cost = CostMatrix::Zero(source.length(), target.length());
  for (const auto& e : plan.entries) {
    if (labels[e.row] != class_id) continue;
    cost.noalias() += e.mass * pairwise_frame_cost_slice(source.series[e.row], target.series[e.col], metric);
  }
  return cost;
}

double evaluate_total_cost(const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                           std::span<const int> labels, const TransportPlan& plan, const ClassPaths& paths,
                           FrameMetric metric) {
  check_pair(source, target, labels);
  if (plan.rows != static_cast<int>(source.size()) || plan.cols != static_cast<int>(target.size())) {
    throw DimensionError("plan shape does not match the datasets");
  }
  double acc = 0.0;
  for (const auto& e : plan.entries) {
    acc += e.mass * aligned_pair_cost(source.series[e.row], target.series[e.col], path_for(paths, labels[e.row]),
                                      metric);
  }
  return acc;
}

double evaluate_alignment_side(const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                               std::span<const int> labels, const TransportPlan& plan, const ClassPaths& paths,
                               FrameMetric metric) {
  double acc = 0.0;
  for (int c : class_ids(labels)) {
    acc += path_cost(dtw_cost_from_plan(source, target, labels, plan, c, metric), path_for(paths, c));
  }
  return acc;
}

MadSolution mad_solve(const TimeSeriesDataset& source, const TimeSeriesDataset& target, const MadConfig& config) {
  const std::vector<int> labels(source.size(), 0);
  check_pair(source, target, labels);
  const BcdProblem problem{source, target, labels, {0}, config, nullptr};
  return solve_with_restarts(problem);
}

MadSolution cmad_solve(const TimeSeriesDataset& source, const TimeSeriesDataset& target, const MadConfig& config) {
  source.require_all_classes_present();
  const std::vector<int>& labels = *source.labels;
  check_pair(source, target, labels);
  const BcdProblem problem{source, target, labels, class_ids(labels), config, nullptr};
  return solve_with_restarts(problem);
}

MadSolution cmad_solve(const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                       std::span<const int> labels, const MadConfig& config,
                       const OtCostAugmentation& augmentation) {
  check_pair(source, target, labels);
  const BcdProblem problem{source, target, labels, class_ids(labels), config, &augmentation};
  return solve_with_restarts(problem);
}

CostMatrix dtw_cost_matrix(const TimeSeriesDataset& source, const TimeSeriesDataset& target, FrameMetric metric) {
  if (source.dim() != target.dim()) throw DimensionError("source and target feature dimensions differ");
  CostMatrix cost(source.size(), target.size());
  parallel_for(source.size() * target.size(), [&](std::size_t k) {
    const std::size_t i = k / target.size();
    const std::size_t j = k % target.size();
    cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
        dtw_pair(source.series[i], target.series[j], metric).cost;
  });
  return cost;
}

OtResult ot_dtw_solve(const TimeSeriesDataset& source, const TimeSeriesDataset& target, FrameMetric metric) {
  return ot_solve(dtw_cost_matrix(source, target, metric), source.weights, target.weights);
}

}  // namespace mad
