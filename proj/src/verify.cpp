#include "mad/verify.hpp"

#include "mad/data.hpp"

#include <cmath>

namespace mad {

namespace {

constexpr const char* kGenerator = "std::mt19937_64 + std::normal_distribution(0,1)";

bool leq_with_slack(double a, double b, double slack) { return a <= b + slack * std::max(1.0, std::abs(b)); }

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  // splitmix64 finaliser over a combined key.
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream * 0x100000001b3ULL + index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::NotApplicable: return "not-applicable";
  }
  return "unknown";
}

Property1Report check_property1(int trials, int n, int length, int dim, int classes, std::uint64_t seed) {
  if (trials < 0) throw InvalidInput("trials must be non-negative");
  if (classes < 1) throw InvalidInput("classes must be at least 1");
  if (n % classes != 0) throw InvalidInput("n must be divisible by the number of classes");
  Property1Report report;
  report.n = n;
  report.length = length;
  report.dim = dim;
  report.classes = classes;
  report.seed = seed;
  report.generator = kGenerator;
  report.trials.resize(static_cast<std::size_t>(trials));

  parallel_for(report.trials.size(), [&](std::size_t k) {
    Property1Trial& trial = report.trials[k];
    trial.trial = static_cast<int>(k);
    trial.source_seed = derive_seed(seed, 0, k);
    trial.target_seed = derive_seed(seed, 1, k);
    try {
      const TimeSeriesDataset source = gen_gaussian(n, length, dim, classes, trial.source_seed);
      TimeSeriesDataset target = gen_gaussian(n, length, dim, classes, trial.target_seed);
      target.labels.reset();

      const MadSolution mad = mad_solve(source, target);
      MadConfig warm;
      warm.init = PathInit::Given;
      for (int c = 0; c < classes; ++c) warm.given_paths[c] = mad.paths.at(0);
      const MadSolution cmad = cmad_solve(source, target, warm);
      const OtResult baseline = ot_dtw_solve(source, target);

      trial.mad_cost = mad.total_cost;
      trial.cmad_cost = cmad.total_cost;
      trial.ot_dtw_cost = baseline.cost;
      trial.ordered = leq_with_slack(trial.ot_dtw_cost, trial.cmad_cost, report.slack) &&
                      leq_with_slack(trial.cmad_cost, trial.mad_cost, report.slack);
    } catch (const std::exception& e) {
      throw SolverError("property 1 trial " + std::to_string(k) + ": " + e.what());
    }
  });
  for (const auto& t : report.trials) report.violations += t.ordered ? 0 : 1;
  return report;
}

Property2Report check_property2(const std::vector<int>& sizes, int length, int dim, std::uint64_t seed,
                                const std::optional<Eigen::VectorXd>& source_weights) {
  Property2Report report;
  report.length = length;
  report.dim = dim;
  report.seed = seed;
  report.generator = kGenerator;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const int n = sizes[k];
    if (n < 1) throw InvalidInput("property 2 sizes must be positive");
    Property2Case result;
    result.n = n;
    try {
      TimeSeriesDataset source = gen_gaussian(n, length, dim, 1, derive_seed(seed, 2, k));
      TimeSeriesDataset target = gen_gaussian(n, length, dim, 1, derive_seed(seed, 3, k));
      if (source_weights) {
        if (source_weights->size() != n) throw DimensionError("custom weights do not match n");
        source.weights = *source_weights;
        source.validate();
      }
      const double uniform = 1.0 / static_cast<double>(n);
      if ((source.weights.array() - uniform).abs().maxCoeff() > kWeightTolerance) {
        result.status = CheckStatus::NotApplicable;
        result.note = "weights are not uniform";
      } else {
        const MadSolution sol = mad_solve(source, target);
        result.nonzeros = sol.plan.nonzeros();
        for (const auto& e : sol.plan.entries) {
          result.max_mass_error = std::max(result.max_mass_error, std::abs(e.mass - uniform));
        }
        const bool ok = result.nonzeros == static_cast<std::size_t>(n) && result.max_mass_error <= 1e-9;
        result.status = ok ? CheckStatus::Pass : CheckStatus::Fail;
      }
    } catch (const std::exception& e) {
      throw SolverError("property 2 size " + std::to_string(n) + ": " + e.what());
    }
    report.failures += result.status == CheckStatus::Fail ? 1 : 0;
    report.cases.push_back(result);
  }
  return report;
}

bool check_monotonicity(const std::vector<double>& trace) {
  if (trace.empty()) return false;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    if (trace[k] > trace[k - 1] + 1e-12) return false;
  }
  return trace.back() >= 0.0;
}

bool check_monotonicity(const MadSolution& solution) { return check_monotonicity(solution.cost_trace); }

}  // namespace mad
