#include "mad/cli.hpp"

#include "mad/data.hpp"
#include "mad/serialize.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>

namespace mad {

namespace {

/// Failure raised inside a command that maps to exit code 1.
struct CommandFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Series single_series(const std::string& path) {
  const TimeSeriesDataset data = load_dataset(path);
  if (data.size() != 1) throw ParseError(path + ": expected exactly one series, found " + std::to_string(data.size()));
  return data.series.front();
}

TimeSeriesDataset load_with_weights(const std::string& path, const std::string& weights) {
  return weights.empty() ? load_dataset(path) : load_dataset(path, std::filesystem::path(weights));
}

std::vector<int> parse_triple(const std::vector<int>& v, const char* what) {
  if (v.size() != 3) throw ParseError(std::string(what) + " expects n,T,q");
  return v;
}

void write_json(std::ostream& out, const Json& j) { out << std::setw(2) << j << '\n'; }

std::ofstream open_output(const std::string& path) {
  std::ofstream file(path);
  if (!file) throw ParseError("cannot write " + path);
  return file;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const auto metric_names = CLI::IsMember({"euclidean", "sqeuclidean", "squared_euclidean"});
  CLI::App app{"Joint optimal transport and dynamic time warping for time-series datasets", "mad"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Cap on worker threads (default: MAD_THREADS or hardware)");

  // dtw
  auto* dtw_cmd = app.add_subcommand("dtw", "DTW between two single-series CSV files");
  std::string dtw_a, dtw_b, dtw_metric = "euclidean";
  dtw_cmd->add_option("--a", dtw_a, "First series CSV")->required();
  dtw_cmd->add_option("--b", dtw_b, "Second series CSV")->required();
  dtw_cmd->add_option("--metric", dtw_metric, "euclidean|sqeuclidean")->check(metric_names);

  // mad / cmad
  struct SolveArgs {
    std::string source, target, source_weights, target_weights, init = "diagonal", metric = "euclidean";
    std::uint64_t seed = 0;
    int max_iter = 50;
    int restarts = 1;
  };
  SolveArgs solve_args;
  auto add_solve_options = [&](CLI::App* cmd) {
    cmd->add_option("--source", solve_args.source, "Source dataset CSV")->required();
    cmd->add_option("--target", solve_args.target, "Target dataset CSV")->required();
    cmd->add_option("--source-weights", solve_args.source_weights, "Source weights sidecar CSV");
    cmd->add_option("--target-weights", solve_args.target_weights, "Target weights sidecar CSV");
    cmd->add_option("--init", solve_args.init, "diagonal|random")->check(CLI::IsMember({"diagonal", "random"}));
    cmd->add_option("--seed", solve_args.seed, "Seed for random paths");
    cmd->add_option("--max-iter", solve_args.max_iter, "Maximum BCD iterations");
    cmd->add_option("--restarts", solve_args.restarts, "Number of BCD runs; the best is reported");
    cmd->add_option("--metric", solve_args.metric, "euclidean|sqeuclidean")->check(metric_names);
  };
  auto* mad_cmd = app.add_subcommand("mad", "MAD: one global warping path");
  add_solve_options(mad_cmd);
  auto* cmad_cmd = app.add_subcommand("cmad", "|C|-MAD: one warping path per source class");
  add_solve_options(cmad_cmd);

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "Empirical property checks");
  std::string which, verify_format = "json";
  int trials = 200, classes = 5;
  std::vector<int> size{50, 20, 2};
  std::vector<int> sizes;
  std::uint64_t verify_seed = 0;
  bool full_scale = false;
  verify_cmd->add_option("property", which, "prop1|prop2")->required()->check(CLI::IsMember({"prop1", "prop2"}));
  auto* trials_opt = verify_cmd->add_option("--trials", trials, "Number of trials (prop1)");
  verify_cmd->add_option("--size", size, "n,T,q")->delimiter(',');
  auto* sizes_opt = verify_cmd->add_option("--sizes", sizes, "Comma-separated n values (prop2)")->delimiter(',');
  verify_cmd->add_option("--classes", classes, "Number of source classes (prop1)");
  verify_cmd->add_option("--seed", verify_seed, "Base seed");
  verify_cmd->add_flag("--full-scale", full_scale, "Use the original experiment's trial counts");
  verify_cmd->add_option("--format", verify_format, "json|text")->check(CLI::IsMember({"json", "text"}));

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "Generate synthetic datasets");
  std::string gen_kind, gen_out, gen_target_out;
  std::vector<int> gen_size{50, 20, 2};
  std::vector<int> shifts;
  int gen_classes = 5;
  double noise = 0.1;
  std::uint64_t gen_seed = 0;
  gen_cmd->add_option("kind", gen_kind, "gaussian|shifted")->required()->check(CLI::IsMember({"gaussian", "shifted"}));
  std::vector<int> gen_size_pos;
  gen_cmd->add_option("dims", gen_size_pos, "n,T,q (same as --size)")->delimiter(',');
  gen_cmd->add_option("--size", gen_size, "n,T,q")->delimiter(',');
  gen_cmd->add_option("--classes", gen_classes, "Number of classes");
  gen_cmd->add_option("--shifts", shifts, "Per-class shifts (shifted)")->delimiter(',');
  gen_cmd->add_option("--noise", noise, "Noise standard deviation (shifted)");
  gen_cmd->add_option("--seed", gen_seed, "Seed");
  gen_cmd->add_option("--out", gen_out, "Output CSV (source for shifted)")->required();
  gen_cmd->add_option("--target-out", gen_target_out, "Target CSV for shifted (default: <out>.target.csv)");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the toy domain-adaptation model");
  std::string train_source, train_target, checkpoint = "checkpoint.json", history = "history.csv", init_checkpoint,
              train_metric;
  TrainConfig train_cfg;
  std::vector<double> proportions;
  train_cmd->add_option("--source", train_source, "Labelled source CSV")->required();
  train_cmd->add_option("--target", train_target, "Target CSV (labels used only for reporting)")->required();
  train_cmd->add_option("--alpha", train_cfg.alpha, "Weight of the aligned embedding distance term");
  train_cmd->add_option("--beta", train_cfg.beta, "Weight of the cross-domain label term");
  train_cmd->add_option("--lr", train_cfg.learning_rate, "SGD learning rate");
  train_cmd->add_option("--epochs", train_cfg.epochs, "Epochs");
  train_cmd->add_option("--batch-size", train_cfg.batch_size, "Minibatch size");
  train_cmd->add_option("--seed", train_cfg.seed, "Seed");
  train_cmd->add_option("--embedding-width", train_cfg.embedding_width, "Convolution output channels");
  train_cmd->add_option("--kernel-width", train_cfg.kernel_width, "Convolution kernel width");
  train_cmd->add_option("--max-bcd-iter", train_cfg.max_bcd_iterations, "BCD iteration cap per minibatch");
  train_cmd->add_option("--first-batch-restarts", train_cfg.first_batch_restarts, "Random-path BCD runs on the first minibatch");
  train_cmd->add_option("--metric", train_metric, "euclidean|sqeuclidean (default sqeuclidean)")->check(metric_names);
  train_cmd->add_option("--target-proportions", proportions, "Target class proportions")->delimiter(',');
  train_cmd->add_option("--init-checkpoint", init_checkpoint, "Start from this checkpoint");
  train_cmd->add_option("--checkpoint", checkpoint, "Checkpoint JSON output");
  train_cmd->add_option("--history", history, "History CSV output");

  // export-heatmap
  auto* heat_cmd = app.add_subcommand("export-heatmap", "Dense TSV of a plan or a class path");
  std::string heat_solution, heat_what, heat_out;
  heat_cmd->add_option("--solution", heat_solution, "Solution JSON from mad/cmad")->required();
  heat_cmd->add_option("--what", heat_what, "plan | path:<class>")->required();
  heat_cmd->add_option("--out", heat_out, "Output TSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  if (threads > 0) set_thread_limit(threads);

  try {
    if (*dtw_cmd) {
      const DtwResult r = dtw_pair(single_series(dtw_a), single_series(dtw_b), parse_metric(dtw_metric));
      write_json(out, to_json(r));
      return kExitOk;
    }

    if (*mad_cmd || *cmad_cmd) {
      const bool per_class = static_cast<bool>(*cmad_cmd);
      const TimeSeriesDataset source = load_with_weights(solve_args.source, solve_args.source_weights);
      TimeSeriesDataset target = load_with_weights(solve_args.target, solve_args.target_weights);
      MadConfig cfg;
      cfg.metric = parse_metric(solve_args.metric);
      cfg.init = parse_path_init(solve_args.init);
      cfg.seed = solve_args.seed;
      cfg.max_iterations = solve_args.max_iter;
      cfg.restarts = solve_args.restarts;
      if (per_class && !source.has_labels()) throw ParseError("cmad needs a label column in the source file");
      MadSolution sol;
      try {
        sol = per_class ? cmad_solve(source, target, cfg) : mad_solve(source, target, cfg);
      } catch (const InvalidInput& e) {
        throw CommandFailure(e.what());
      }
      Json j = to_json(sol);
      j["config"] = {{"command", per_class ? "cmad" : "mad"}, {"metric", to_string(cfg.metric)},
                     {"init", to_string(cfg.init)},          {"seed", cfg.seed},
                     {"max_iterations", cfg.max_iterations}, {"restarts", cfg.restarts}};
      write_json(out, j);
      return kExitOk;
    }

    if (*verify_cmd) {
      parse_triple(size, "--size");
      if (which == "prop1") {
        if (full_scale && trials_opt->count() == 0) trials = 2000;
        const Property1Report report = check_property1(trials, size[0], size[1], size[2], classes, verify_seed);
        if (verify_format == "json") {
          write_json(out, to_json(report));
        } else {
          out << to_text(report);
        }
        return report.violations == 0 ? kExitOk : kExitFailure;
      }
      if (sizes_opt->count() == 0) {
        sizes = full_scale ? std::vector<int>{2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000}
                           : std::vector<int>{2, 5, 10, 50, 100};
      }
      const Property2Report report = check_property2(sizes, size[1], size[2], verify_seed);
      if (verify_format == "json") {
        write_json(out, to_json(report));
      } else {
        out << to_text(report);
      }
      return report.failures == 0 ? kExitOk : kExitFailure;
    }

    if (*gen_cmd) {
      if (!gen_size_pos.empty()) gen_size = gen_size_pos;
      parse_triple(gen_size, "size");
      if (gen_kind == "gaussian") {
        save_dataset(gen_gaussian(gen_size[0], gen_size[1], gen_size[2], gen_classes, gen_seed), gen_out);
        write_json(out, {{"written", {gen_out}}});
      } else {
        if (shifts.empty()) shifts.assign(static_cast<std::size_t>(gen_classes), 0);
        const ShiftedPair pair = gen_shifted_pair(gen_size[0], gen_size[1], gen_size[2], gen_classes, shifts, noise, gen_seed);
        const std::string target_out = gen_target_out.empty() ? gen_out + ".target.csv" : gen_target_out;
        save_dataset(pair.source, gen_out);
        save_dataset(pair.target, target_out);
        write_json(out, {{"written", {gen_out, target_out}}});
      }
      return kExitOk;
    }

    if (*train_cmd) {
      if (!train_metric.empty()) train_cfg.metric = parse_metric(train_metric);
      if (!proportions.empty()) {
        train_cfg.target_class_proportions = Eigen::Map<const Eigen::VectorXd>(proportions.data(), static_cast<Eigen::Index>(proportions.size()));
      }
      const TimeSeriesDataset source = load_dataset(train_source);
      const TimeSeriesDataset target = load_dataset(train_target);
      if (!source.has_labels()) throw ParseError("train needs a label column in the source file");
      const int num_classes = source.num_classes();
      ToyModel model = init_checkpoint.empty()
                           ? ToyModel::random(static_cast<int>(source.dim()), train_cfg.embedding_width,
                                              train_cfg.kernel_width, num_classes, train_cfg.seed)
                           : load_checkpoint(init_checkpoint);
      TrainResult result;
      try {
        result = train(std::move(model), source, target, train_cfg);
      } catch (const InvalidInput& e) {
        throw CommandFailure(e.what());
      }
      save_checkpoint(result.model, checkpoint);
      {
        std::ofstream hist = open_output(history);
        write_history_csv(result.history, hist);
      }
      Json j;
      j["config"] = to_json(train_cfg);
      j["checkpoint"] = checkpoint;
      j["history"] = history;
      if (!result.history.empty()) {
        const auto& last = result.history.back();
        j["final"] = {{"epoch", last.epoch}, {"loss", last.loss}, {"source_acc", last.source_acc}};
        j["final"]["target_acc"] = std::isnan(last.target_acc) ? Json(nullptr) : Json(last.target_acc);
      }
      write_json(out, j);
      return kExitOk;
    }

    if (*heat_cmd) {
      std::ifstream in(heat_solution);
      if (!in) throw ParseError("cannot open " + heat_solution);
      MadSolution sol;
      try {
        sol = solution_from_json(Json::parse(in));
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(heat_solution + ": " + e.what());
      }
      Eigen::MatrixXd dense;
      if (heat_what == "plan") {
        dense = sol.plan.to_dense();
      } else if (heat_what.rfind("path:", 0) == 0) {
        int class_id = 0;
        try {
          class_id = std::stoi(heat_what.substr(5));
        } catch (const std::exception&) {
          throw ParseError("--what path:<class> needs an integer class id");
        }
        const auto it = sol.paths.find(class_id);
        if (it == sol.paths.end()) throw CommandFailure("unknown class id " + std::to_string(class_id));
        const auto& last = it->second.steps.back();
        dense = it->second.to_matrix(last.first + 1, last.second + 1);
      } else {
        throw ParseError("--what must be 'plan' or 'path:<class>'");
      }
      std::ofstream file = open_output(heat_out);
      write_tsv(dense, file);
      write_json(out, {{"written", heat_out}, {"rows", dense.rows()}, {"cols", dense.cols()}});
      return kExitOk;
    }
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CommandFailure& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace mad
