#pragma once

#include "mad/core.hpp"
#include "mad/dtw.hpp"
#include "mad/ot.hpp"

#include <map>
#include <span>

namespace mad {

/// Per-class warping paths keyed by class id. Plain MAD uses the single key 0.
using ClassPaths = std::map<int, WarpingPath>;

enum class PathInit { Diagonal, Random, Given };

PathInit parse_path_init(const std::string& name);
std::string to_string(PathInit init);

struct MadConfig {
  FrameMetric metric = FrameMetric::Euclidean;
  int max_iterations = 50;
  PathInit init = PathInit::Diagonal;
  /// Used when init == Given; must cover every class.
  ClassPaths given_paths;
  std::uint64_t seed = 0;
  /// Total number of BCD runs. Runs after the first start from random paths seeded with
  /// seed + run index; the lowest-cost run is returned.
  int restarts = 1;
};

/// Optional augmentation of the transport cost used by the minibatch trainer:
/// C = path_scale * C_OT(paths) + additive. The alignment cost is left unchanged.
struct OtCostAugmentation {
  double path_scale = 1.0;
  CostMatrix additive;
};

struct MadSolution {
  TransportPlan plan;
  ClassPaths paths;
  double total_cost = 0.0;
  /// Objective after every half-step (transport step, then alignment step).
  std::vector<double> cost_trace;
  int iterations = 0;
  bool converged = false;
};

/// Transport cost for fixed paths: entry (i, j) sums d(x^i_s, x'^j_t) over the cells of
/// the path of class labels[i].
CostMatrix ot_cost_from_paths(const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                              std::span<const int> labels, const ClassPaths& paths,
                              FrameMetric metric = FrameMetric::Euclidean);

/// Alignment cost of one class for a fixed plan: entry (s, t) sums gamma_ij d(x^i_s, x'^j_t)
/// over plan entries whose source series belongs to class_id.
CostMatrix dtw_cost_from_plan(const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                              std::span<const int> labels, const TransportPlan& plan, int class_id,
                              FrameMetric metric = FrameMetric::Euclidean);

/// Objective sum_ij gamma_ij sum_{(s,t) in path(labels[i])} d(x^i_s, x'^j_t), from scratch.
double evaluate_total_cost(const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                           std::span<const int> labels, const TransportPlan& plan,
                           const ClassPaths& paths, FrameMetric metric = FrameMetric::Euclidean);

/// Same objective contracted as sum_c <C_DTW^c(plan), path_c>.
double evaluate_alignment_side(const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                               std::span<const int> labels, const TransportPlan& plan,
                               const ClassPaths& paths, FrameMetric metric = FrameMetric::Euclidean);

/// Single global path (every source series treated as class 0).
MadSolution mad_solve(const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                      const MadConfig& config = {});

/// One path per source class; source.labels is required and every class must be present.
MadSolution cmad_solve(const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                       const MadConfig& config = {});

/// cmad_solve with the trainer's augmented transport cost.
MadSolution cmad_solve(const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                       std::span<const int> labels, const MadConfig& config,
                       const OtCostAugmentation& augmentation);

/// Transport with pairwise DTW costs as ground cost.
OtResult ot_dtw_solve(const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                      FrameMetric metric = FrameMetric::Euclidean);

/// Matrix of pairwise DTW costs, C_ij = DTW(x^i, x'^j).
CostMatrix dtw_cost_matrix(const TimeSeriesDataset& source, const TimeSeriesDataset& target,
                           FrameMetric metric = FrameMetric::Euclidean);

}  // namespace mad
