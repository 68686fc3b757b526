#pragma once

#include <vector>

#include "wcmdp/model.hpp"
#include "wcmdp/types.hpp"

namespace wcmdp {

/// Integer allocation of n processes to (state, action) cells: counts/n is a
/// lattice point of Y that satisfies the finite-n constraints.
struct DiscreteAssignment {
    int num_states = 0;
    int num_actions = 0;
    long long n = 0;
    std::vector<long long> counts;  // action-major, like StateActionMeasure

    DiscreteAssignment() = default;
    DiscreteAssignment(int states, int actions, long long n_)
        : num_states(states), num_actions(actions), n(n_),
          counts(static_cast<size_t>(states) * actions, 0) {}

    long long& at(int state, int action) { return counts[static_cast<size_t>(action) * num_states + state]; }
    long long at(int state, int action) const { return counts[static_cast<size_t>(action) * num_states + state]; }

    StateActionMeasure to_measure() const;
    std::vector<long long> state_counts() const;  // row sums: n * x
};

/// Rounds a fluid value down on every resource-consuming action and routes
/// the leftover processes to the free action 0:
///   counts(i,a) = floor(n y(i,a)) for a != 0,
///   counts(i,0) = n x(i) - sum_{a != 0} counts(i,a).
/// Feasible whenever y was (less weight on consuming actions), with
/// sup-norm gap at most |A|/n. Requires the inequality assumption and a
/// constant finite-n rule; throws std::invalid_argument when n*x is not
/// integral.
DiscreteAssignment round_inequality(const StateActionMeasure& y_fluid, const OccupancyMeasure& x,
                                    long long n, const ModelSpec& spec);

/// Budget-exhausting rounding for the two-action budget case: floor the
/// activation row, then scan states in increasing order topping up fractional
/// cells by one process while budget floor(d n) remains. The result meets the
/// finite-n budget exactly, with sup-norm gap at most 1/n.
/// Floors use a 1e-9 upward nudge so values like 2 - 1e-12 count as integral.
DiscreteAssignment round_bandit(const StateActionMeasure& y_fluid, const OccupancyMeasure& x,
                                long long n, double budget);

struct Certificate {
    bool feasible = true;
    double gap = 0.0;  // sup-norm distance to the fluid value, when supplied
    std::vector<Violation> violations;
};

/// Re-checks every discrete-control condition (nonnegative counts, total mass
/// n, finite-n equality and inequality constraints) independently of the
/// rounding code path. Pass the fluid value to get the sup-norm gap.
Certificate certify(const DiscreteAssignment& assignment, const ModelSpec& spec,
                    const StateActionMeasure* y_fluid = nullptr);

}  // namespace wcmdp
