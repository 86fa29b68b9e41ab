#pragma once

#include "mad/core.hpp"

namespace mad {

struct OtResult {
  TransportPlan plan;
  double cost = 0.0;
};

/// Exact discrete optimal transport by the transportation simplex.
///
/// The returned plan is a vertex of the transport polytope, so it has at most n + n' - 1
/// nonzeros; for n = n' with uniform weights it is a scaled permutation matrix. Supplies are
/// perturbed by 1e-12 during pivoting to avoid degenerate cycling; the final basic solution is
/// recomputed from the unperturbed marginals, entries below 1e-12 are dropped and their mass
/// folded into the largest entry of the same row.
OtResult ot_solve(const CostMatrix& cost, const Eigen::VectorXd& source_weights,
                  const Eigen::VectorXd& target_weights);

/// True iff the plan is non-negative, in bounds and reproduces both marginals within `tol`.
bool validate_plan(const TransportPlan& plan, const Eigen::VectorXd& source_weights,
                   const Eigen::VectorXd& target_weights, double tol = kWeightTolerance);

}  // namespace mad
