#pragma once

#include <vector>

#include "wcmdp/model.hpp"
#include "wcmdp/types.hpp"

namespace wcmdp {

/// Optimal occupancy data of the long-run relaxation LP.
struct RelaxationSolution {
    StateActionMeasure y_star;  // a vertex-optimal point of the relaxation
    double gain_bound = 0.0;    // optimal value; upper-bounds every policy's gain
    OccupancyMeasure x_star;    // state marginal of y_star
    std::vector<int> support;   // states with x_star(i) > kSupportTol
    Vec eq_residual;            // sum_a y*(a)C(a) - d
    Vec ineq_slack;             // f - sum_a y*(a)E(a), componentwise
};

constexpr double kSupportTol = 1e-9;

/// Solves the relaxation
///   maximize sum_a y(a).r(a)
///   s.t. sum_a y(a)P(a) = sum_a y(a),  sum_a y(a)C(a) = d,
///        sum_a y(a)E(a) <= f,          y >= 0, total mass 1.
///
/// The balance block is rank-deficient by construction (its rows sum to
/// zero), so one row is dropped before solving. The fixed pivot rule makes
/// the returned vertex deterministic for a fixed spec. Throws InfeasibleError
/// when the constraint set is empty; Y is compact so the LP is never
/// unbounded.
RelaxationSolution solve_fluid_relaxation(const ModelSpec& spec);

/// Candidate single-process policy read off the relaxation:
/// mu(a|i) = y*(i,a)/x*(i) on the support, uniform elsewhere.
SinglePolicy policy_from_relaxation(const RelaxationSolution& sol);

/// pi(a|i) = 1/|A| everywhere.
SinglePolicy uniform_policy(const ModelSpec& spec);

}  // namespace wcmdp
