#pragma once

#include "mad/solver.hpp"

#include <cstdint>
#include <string>

namespace mad {

struct Property1Trial {
  int trial = 0;
  std::uint64_t source_seed = 0;
  std::uint64_t target_seed = 0;
  double ot_dtw_cost = 0.0;
  double cmad_cost = 0.0;
  double mad_cost = 0.0;
  bool ordered = true;
};

struct Property1Report {
  int n = 0, length = 0, dim = 0, classes = 0;
  std::uint64_t seed = 0;
  std::string generator;
  std::vector<Property1Trial> trials;
  int violations = 0;
  /// Relative slack used for both inequalities.
  double slack = 1e-9;
};

/// For each trial, draws two standard-normal (n x T x q) datasets, balanced labels on the
/// source, and checks cost(OT_DTW) <= cost(|C|-MAD) <= cost(MAD). The |C|-MAD run starts
/// from the MAD solution's path for every class, so it is a descent from the MAD optimum.
Property1Report check_property1(int trials, int n, int length, int dim, int classes, std::uint64_t seed);

enum class CheckStatus { Pass, Fail, NotApplicable };
std::string to_string(CheckStatus status);

struct Property2Case {
  int n = 0;
  CheckStatus status = CheckStatus::Pass;
  std::size_t nonzeros = 0;
  double max_mass_error = 0.0;
  std::string note;
};

struct Property2Report {
  int length = 0, dim = 0;
  std::uint64_t seed = 0;
  std::string generator;
  std::vector<Property2Case> cases;
  int failures = 0;
};

/// For each n, runs MAD on two (n x T x q) Gaussian datasets and checks the plan is a
/// one-to-one matching: exactly n entries of mass 1/n (tolerance 1e-9). Cases whose weights
/// are not uniform are reported as not applicable.
Property2Report check_property2(const std::vector<int>& sizes, int length, int dim, std::uint64_t seed,
                                const std::optional<Eigen::VectorXd>& source_weights = std::nullopt);

/// True iff the trace is non-increasing within 1e-12 and its last value is >= 0.
bool check_monotonicity(const std::vector<double>& trace);
bool check_monotonicity(const MadSolution& solution);

/// Seed for trial k derived from a base seed; stable across platforms.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

}  // namespace mad
