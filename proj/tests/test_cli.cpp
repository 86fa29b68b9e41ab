#include <doctest.h>

#include "mad/cli.hpp"
#include "mad/data.hpp"
#include "mad/serialize.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mad;

namespace {
struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "mad");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "mad_cli_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}
}  // namespace

TEST_CASE("gen writes the expected number of rows") {
  const Run r = run({"gen", "gaussian", "50,20,2", "--classes", "5", "--seed", "1", "--out", scratch("g.csv")});
  REQUIRE(r.code == 0);
  const std::string text = read_file(scratch("g.csv"));
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 50 * 20);
  CHECK(run({"gen", "gaussian", "--size", "50,20,2", "--classes", "5", "--seed", "1", "--out", scratch("g2.csv")}).code == 0);
  CHECK(read_file(scratch("g2.csv")) == text);
}

TEST_CASE("dtw command") {
  save_dataset(gen_gaussian(1, 6, 2, 1, 3), scratch("a.csv"));
  Run r = run({"dtw", "--a", scratch("a.csv"), "--b", scratch("a.csv")});
  REQUIRE(r.code == 0);
  Json j = Json::parse(r.out);
  CHECK(j["cost"].get<double>() == 0.0);
  CHECK(path_from_json(j["path"]).is_valid(6, 6));

  save_dataset(TimeSeriesDataset::uniform({Series::Zero(1, 1)}), scratch("one.csv"));
  save_dataset(TimeSeriesDataset::uniform({Series::Ones(3, 1)}), scratch("three.csv"));
  r = run({"dtw", "--a", scratch("one.csv"), "--b", scratch("three.csv")});
  REQUIRE(r.code == 0);
  CHECK(Json::parse(r.out)["path"].size() == 3);

  CHECK(run({"dtw", "--a", scratch("one.csv"), "--b", scratch("a.csv")}).code == 2);
  CHECK(run({"dtw", "--a", scratch("does-not-exist.csv"), "--b", scratch("a.csv")}).code == 2);
}

TEST_CASE("mad and cmad commands") {
  save_dataset(gen_gaussian(10, 8, 2, 2, 1), scratch("s.csv"));
  save_dataset(gen_gaussian(10, 8, 2, 2, 2), scratch("t.csv"));

  Run same = run({"mad", "--source", scratch("s.csv"), "--target", scratch("s.csv")});
  REQUIRE(same.code == 0);
  CHECK(Json::parse(same.out)["total_cost"].get<double>() == 0.0);

  Run r = run({"cmad", "--source", scratch("s.csv"), "--target", scratch("t.csv"), "--init", "random", "--seed", "4",
               "--restarts", "3", "--max-iter", "20"});
  REQUIRE(r.code == 0);
  const Json j = Json::parse(r.out);
  CHECK(j["paths"].size() == 2);
  CHECK(j["config"]["restarts"] == 3);
  const MadSolution sol = solution_from_json(j);
  CHECK(sol.plan.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t k = 1; k < sol.cost_trace.size(); ++k) CHECK(sol.cost_trace[k] <= sol.cost_trace[k - 1] + 1e-12);
  CHECK(run({"cmad", "--source", scratch("s.csv"), "--target", scratch("t.csv"), "--init", "random", "--seed", "4",
             "--restarts", "3", "--max-iter", "20"}).out == r.out);

  std::ofstream(scratch("sol.json")) << r.out;
  CHECK(run({"export-heatmap", "--solution", scratch("sol.json"), "--what", "path:1", "--out", scratch("p.tsv")}).code == 0);
  Run missing = run({"export-heatmap", "--solution", scratch("sol.json"), "--what", "path:7", "--out", scratch("p.tsv")});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("7") != std::string::npos);
}

TEST_CASE("cmad reports an empty class") {
  std::ofstream(scratch("gap.csv")) << "series_id,label,t,f0\n0,0,0,1\n0,0,1,2\n1,2,0,1\n1,2,1,0\n";
  const Run r = run({"cmad", "--source", scratch("gap.csv"), "--target", scratch("gap.csv")});
  CHECK(r.code == 1);
  CHECK(r.err.find("class 1") != std::string::npos);

  std::ofstream(scratch("nolabel.csv")) << "series_id,t,f0\n0,0,1\n0,1,2\n";
  CHECK(run({"cmad", "--source", scratch("nolabel.csv"), "--target", scratch("nolabel.csv")}).code == 2);
}

TEST_CASE("verify commands") {
  Run r = run({"verify", "prop1", "--trials", "3", "--size", "10,6,2", "--classes", "2"});
  CHECK(r.code == 0);
  CHECK(Json::parse(r.out)["violations"] == 0);
  r = run({"verify", "prop2", "--sizes", "2,5", "--format", "text"});
  CHECK(r.code == 0);
  CHECK(r.out.find("failures=0") != std::string::npos);
  CHECK(run({"verify", "prop3"}).code == 2);
}

TEST_CASE("export heatmap of a property-2 plan has n nonzero cells") {
  save_dataset(gen_gaussian(7, 5, 2, 1, 1), scratch("p2s.csv"));
  save_dataset(gen_gaussian(7, 5, 2, 1, 2), scratch("p2t.csv"));
  const Run r = run({"mad", "--source", scratch("p2s.csv"), "--target", scratch("p2t.csv")});
  std::ofstream(scratch("p2.json")) << r.out;
  REQUIRE(run({"export-heatmap", "--solution", scratch("p2.json"), "--what", "plan", "--out", scratch("p2.tsv")}).code == 0);
  std::istringstream tsv(read_file(scratch("p2.tsv")));
  int nonzero = 0, rows = 0;
  double mass = 0.0;
  for (std::string line; std::getline(tsv, line); ++rows) {
    std::istringstream cells(line);
    for (std::string cell; std::getline(cells, cell, '\t');) {
      const double v = std::stod(cell);
      nonzero += v != 0.0;
      mass += v;
    }
  }
  CHECK(rows == 7);
  CHECK(nonzero == 7);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("train echoes the default hyper-parameters") {
  const auto pair = gen_shifted_pair(20, 10, 2, 2, {1, -1}, 0.1, 1);
  save_dataset(pair.source, scratch("src.csv"));
  save_dataset(pair.target, scratch("tgt.csv"));
  const Run r = run({"train", "--source", scratch("src.csv"), "--target", scratch("tgt.csv"), "--epochs", "1",
                     "--batch-size", "10", "--checkpoint", scratch("ck.json"), "--history", scratch("h.csv")});
  REQUIRE(r.code == 0);
  const Json cfg = Json::parse(r.out)["config"];
  CHECK(cfg["alpha"].get<double>() == 0.01);
  CHECK(cfg["beta"].get<double>() == 0.01);
  CHECK(cfg["learning_rate"].get<double>() == 0.0001);
  const ToyModel m = load_checkpoint(scratch("ck.json"));
  CHECK(m.num_classes == 2);
  CHECK(read_file(scratch("h.csv")).rfind("epoch,loss,source_acc,target_acc\n", 0) == 0);
}

TEST_CASE("train with alpha = beta = 0 reproduces the source-only history") {
  const auto pair = gen_shifted_pair(20, 10, 2, 2, {1, -1}, 0.1, 1);
  save_dataset(pair.source, scratch("src0.csv"));
  save_dataset(pair.target, scratch("tgt0.csv"));
  std::vector<std::string> common{"train", "--source", scratch("src0.csv"), "--epochs", "2", "--batch-size", "5",
                                  "--lr", "0.05", "--alpha", "0", "--beta", "0"};
  auto a = common, b = common;
  a.insert(a.end(), {"--target", scratch("tgt0.csv"), "--history", scratch("h0.csv"), "--checkpoint", scratch("c0.json")});
  b.insert(b.end(), {"--target", scratch("src0.csv"), "--history", scratch("h1.csv"), "--checkpoint", scratch("c1.json")});
  REQUIRE(run(a).code == 0);
  REQUIRE(run(b).code == 0);
  // Only the target accuracy column may differ; everything learned must be identical.
  CHECK(read_file(scratch("c0.json")) == read_file(scratch("c1.json")));
}

TEST_CASE("usage errors exit 2, help exits 0") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"mad", "--source", "x.csv"}).code == 2);
  CHECK(run({"mad", "--source", "x.csv", "--target", "y.csv", "--max-iter", "many"}).code == 2);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"dtw", "--a", "x", "--b", "y", "--metric", "cosine"}).code == 2);
}

TEST_CASE("checkpoint round trip") {
  const ToyModel m = ToyModel::random(3, 4, 5, 2, 9);
  save_checkpoint(m, scratch("m.json"));
  const ToyModel back = load_checkpoint(scratch("m.json"));
  CHECK(back.flatten() == m.flatten());
  std::ofstream(scratch("bad.json")) << "{\"format\": \"something-else\"}";
  CHECK_THROWS_AS(load_checkpoint(scratch("bad.json")), ParseError);
}

TEST_CASE("solution json round trip") {
  MadSolution sol;
  sol.plan.rows = 2;
  sol.plan.cols = 3;
  sol.plan.entries = {{0, 1, 0.5}, {1, 2, 0.5}};
  sol.paths[0] = WarpingPath::diagonal(4, 3);
  sol.paths[3] = WarpingPath::diagonal(4, 3);
  sol.total_cost = 1.0 / 3.0;
  sol.cost_trace = {0.7, 1.0 / 3.0};
  sol.iterations = 1;
  sol.converged = true;
  const MadSolution back = solution_from_json(Json::parse(to_json(sol).dump()));
  CHECK(back.total_cost == sol.total_cost);
  CHECK(back.paths == sol.paths);
  CHECK(back.cost_trace == sol.cost_trace);
  CHECK(back.plan.entries.size() == 2);
  CHECK_THROWS_AS(solution_from_json(Json::parse("{\"total_cost\": 1}")), ParseError);
}
