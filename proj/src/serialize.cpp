#include "mad/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mad {

namespace {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Json to_json(const WarpingPath& path) {
  Json steps = Json::array();
  for (const auto& [s, t] : path.steps) steps.push_back({s, t});
  return steps;
}

WarpingPath path_from_json(const Json& j) {
  if (!j.is_array()) throw ParseError("warping path must be an array of [s, t] pairs");
  WarpingPath path;
  for (const auto& step : j) {
    if (!step.is_array() || step.size() != 2) throw ParseError("warping path step must be [s, t]");
    path.steps.emplace_back(step[0].get<int>(), step[1].get<int>());
  }
  return path;
}

Json to_json(const TransportPlan& plan) {
  Json triplets = Json::array();
  for (const auto& e : plan.entries) triplets.push_back({e.row, e.col, e.mass});
  return {{"rows", plan.rows}, {"cols", plan.cols}, {"triplets", triplets}};
}

TransportPlan plan_from_json(const Json& j) {
  TransportPlan plan;
  try {
    plan.rows = j.at("rows").get<int>();
    plan.cols = j.at("cols").get<int>();
    for (const auto& t : j.at("triplets")) {
      if (!t.is_array() || t.size() != 3) throw ParseError("plan triplet must be [i, j, mass]");
      const PlanEntry e{t[0].get<int>(), t[1].get<int>(), t[2].get<double>()};
      if (e.row < 0 || e.row >= plan.rows || e.col < 0 || e.col >= plan.cols) throw ParseError("plan triplet out of range");
      plan.entries.push_back(e);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed plan: ") + e.what());
  }
  return plan;
}

Json to_json(const DtwResult& result) { return {{"cost", result.cost}, {"path", to_json(result.path)}}; }

Json to_json(const MadSolution& solution) {
  Json paths = Json::object();
  for (const auto& [c, path] : solution.paths) paths[std::to_string(c)] = to_json(path);
  return {{"total_cost", solution.total_cost},
          {"iterations", solution.iterations},
          {"converged", solution.converged},
          {"plan", to_json(solution.plan)},
          {"paths", paths},
          {"cost_trace", solution.cost_trace}};
}

MadSolution solution_from_json(const Json& j) {
  MadSolution sol;
  try {
    sol.total_cost = j.at("total_cost").get<double>();
    sol.iterations = j.at("iterations").get<int>();
    sol.converged = j.at("converged").get<bool>();
    sol.plan = plan_from_json(j.at("plan"));
    for (const auto& [key, value] : j.at("paths").items()) sol.paths[std::stoi(key)] = path_from_json(value);
    sol.cost_trace = j.at("cost_trace").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed solution: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw ParseError("malformed solution: path keys must be integer class ids");
  }
  return sol;
}

Json to_json(const Property1Report& report) {
  Json trials = Json::array();
  for (const auto& t : report.trials) {
    trials.push_back({{"trial", t.trial},
                      {"source_seed", t.source_seed},
                      {"target_seed", t.target_seed},
                      {"ot_dtw", t.ot_dtw_cost},
                      {"cmad", t.cmad_cost},
                      {"mad", t.mad_cost},
                      {"ordered", t.ordered}});
  }
  return {{"property", "prop1"},
          {"n", report.n},
          {"T", report.length},
          {"q", report.dim},
          {"classes", report.classes},
          {"seed", report.seed},
          {"generator", report.generator},
          {"relative_slack", report.slack},
          {"trial_count", report.trials.size()},
          {"violations", report.violations},
          {"trials", trials}};
}

Json to_json(const Property2Report& report) {
  Json cases = Json::array();
  for (const auto& c : report.cases) {
    Json item = {{"n", c.n}, {"status", to_string(c.status)}, {"nonzeros", c.nonzeros}, {"max_mass_error", c.max_mass_error}};
    if (!c.note.empty()) item["note"] = c.note;
    cases.push_back(item);
  }
  return {{"property", "prop2"}, {"T", report.length}, {"q", report.dim},         {"seed", report.seed},
          {"generator", report.generator}, {"failures", report.failures}, {"cases", cases}};
}

std::string to_text(const Property1Report& report) {
  std::ostringstream out;
  out << "prop1  n=" << report.n << " T=" << report.length << " q=" << report.dim << " classes=" << report.classes
      << " seed=" << report.seed << " trials=" << report.trials.size() << " violations=" << report.violations << '\n';
  out << std::setw(6) << "trial" << std::setw(16) << "ot_dtw" << std::setw(16) << "cmad" << std::setw(16) << "mad"
      << std::setw(9) << "ordered" << '\n';
  out << std::fixed << std::setprecision(6);
  for (const auto& t : report.trials) {
    out << std::setw(6) << t.trial << std::setw(16) << t.ot_dtw_cost << std::setw(16) << t.cmad_cost << std::setw(16)
        << t.mad_cost << std::setw(9) << (t.ordered ? "yes" : "NO") << '\n';
  }
  return out.str();
}

std::string to_text(const Property2Report& report) {
  std::ostringstream out;
  out << "prop2  T=" << report.length << " q=" << report.dim << " seed=" << report.seed << " failures=" << report.failures
      << '\n';
  out << std::setw(8) << "n" << std::setw(16) << "status" << std::setw(10) << "nonzeros" << std::setw(16) << "max_err" << '\n';
  for (const auto& c : report.cases) {
    out << std::setw(8) << c.n << std::setw(16) << to_string(c.status) << std::setw(10) << c.nonzeros << std::setw(16)
        << std::scientific << std::setprecision(3) << c.max_mass_error << std::defaultfloat << '\n';
  }
  return out.str();
}

Json to_json(const TrainConfig& config) {
  Json j = {{"alpha", config.alpha},
            {"beta", config.beta},
            {"learning_rate", config.learning_rate},
            {"batch_size", config.batch_size},
            {"epochs", config.epochs},
            {"seed", config.seed},
            {"metric", to_string(config.metric)},
            {"embedding_width", config.embedding_width},
            {"kernel_width", config.kernel_width},
            {"max_bcd_iterations", config.max_bcd_iterations},
            {"first_batch_restarts", config.first_batch_restarts}};
  if (config.target_class_proportions) {
    const auto& p = *config.target_class_proportions;
    j["target_class_proportions"] = std::vector<double>(p.data(), p.data() + p.size());
  }
  return j;
}

Json to_json(const ToyModel& model) {
  auto row_major = [](const Eigen::MatrixXd& m) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
    }
    return out;
  };
  return {{"format", "mad-toy-model"},
          {"version", 1},
          {"input_dim", model.input_dim},
          {"embedding_width", model.embedding_width},
          {"kernel_width", model.kernel_width},
          {"num_classes", model.num_classes},
          {"conv_kernels", row_major(model.conv)},
          {"classifier_weights", row_major(model.classifier)},
          {"classifier_bias", std::vector<double>(model.bias.data(), model.bias.data() + model.bias.size())}};
}

ToyModel model_from_json(const Json& j) {
  try {
    if (j.at("format").get<std::string>() != "mad-toy-model" || j.at("version").get<int>() != 1) {
      throw ParseError("unsupported checkpoint format");
    }
    ToyModel m = ToyModel::zeros(j.at("input_dim").get<int>(), j.at("embedding_width").get<int>(),
                                 j.at("kernel_width").get<int>(), j.at("num_classes").get<int>());
    auto fill = [](Eigen::MatrixXd& m, const std::vector<double>& v, const char* name) {
      if (static_cast<Eigen::Index>(v.size()) != m.size()) throw ParseError(std::string("checkpoint field ") + name + " has the wrong length");
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = v[static_cast<std::size_t>(r * m.cols() + c)];
      }
    };
    fill(m.conv, j.at("conv_kernels").get<std::vector<double>>(), "conv_kernels");
    fill(m.classifier, j.at("classifier_weights").get<std::vector<double>>(), "classifier_weights");
    const auto bias = j.at("classifier_bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(bias.size()) != m.bias.size()) throw ParseError("checkpoint field classifier_bias has the wrong length");
    m.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), m.bias.size());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const ToyModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << std::setw(2) << to_json(model) << '\n';
}

ToyModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return model_from_json(Json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_history_csv(const std::vector<EpochRecord>& history, std::ostream& out) {
  out << "epoch,loss,source_acc,target_acc\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << number(r.loss) << ',' << number(r.source_acc) << ','
        << (std::isnan(r.target_acc) ? std::string() : number(r.target_acc)) << '\n';
  }
}

void write_tsv(const Eigen::MatrixXd& matrix, std::ostream& out) {
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      if (c > 0) out << '\t';
      out << number(matrix(r, c));
    }
    out << '\n';
  }
}

}  // namespace mad
