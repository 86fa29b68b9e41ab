#pragma once

#include "mad/da.hpp"
#include "mad/dtw.hpp"
#include "mad/solver.hpp"
#include "mad/verify.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>

namespace mad {

using Json = nlohmann::ordered_json;

Json to_json(const WarpingPath& path);
WarpingPath path_from_json(const Json& j);

Json to_json(const TransportPlan& plan);
TransportPlan plan_from_json(const Json& j);

Json to_json(const DtwResult& result);
/// {total_cost, iterations, converged, plan, paths, cost_trace}
Json to_json(const MadSolution& solution);
MadSolution solution_from_json(const Json& j);

Json to_json(const Property1Report& report);
Json to_json(const Property2Report& report);
/// Aligned-column text for humans.
std::string to_text(const Property1Report& report);
std::string to_text(const Property2Report& report);

Json to_json(const TrainConfig& config);

/// {format, version, input_dim, embedding_width, kernel_width, num_classes,
///  conv_kernels, classifier_weights, classifier_bias}; arrays are flat, row-major.
Json to_json(const ToyModel& model);
ToyModel model_from_json(const Json& j);

void save_checkpoint(const ToyModel& model, const std::filesystem::path& path);
ToyModel load_checkpoint(const std::filesystem::path& path);

/// CSV with header epoch,loss,source_acc,target_acc.
void write_history_csv(const std::vector<EpochRecord>& history, std::ostream& out);

/// Dense matrix as tab-separated rows.
void write_tsv(const Eigen::MatrixXd& matrix, std::ostream& out);

}  // namespace mad
