#include "wcmdp/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wcmdp {

namespace {

long long budget_for(const ModelSpec& spec, long long n) {
    if (!spec.satisfies_bandit_assumption()) {
        throw std::invalid_argument("budget policies require a bandit instance");
    }
    const double d_n = spec.eq_rhs_n(n)[0];
    const double target = d_n * static_cast<double>(n);
    const long long budget = std::llround(target);
    if (std::abs(target - static_cast<double>(budget)) > 1e-6) {
        throw InfeasibleError("budget d_n * n is not integral at this n; the equality constraint is unsatisfiable");
    }
    if (budget < 0 || budget > n) throw InfeasibleError("budget exceeds the population");
    return budget;
}

}  // namespace

bool is_permutation_order(const PriorityOrder& order, int num_states) {
    if (static_cast<int>(order.order.size()) != num_states) return false;
    std::vector<char> seen(num_states, 0);
    for (int s : order.order) {
        if (s < 0 || s >= num_states || seen[s]) return false;
        seen[s] = 1;
    }
    return true;
}

PriorityOrder lp_priority_order(const RelaxationSolution& sol) {
    const int S = sol.y_star.num_states;
    std::vector<char> in_support(S, 0);
    for (int i : sol.support) in_support[i] = 1;
    Vec fraction(S, -1.0);  // off-support states sink to the bottom
    for (int i : sol.support) fraction[i] = sol.y_star.at(i, 1) / sol.x_star[i];
    PriorityOrder order;
    order.order.resize(S);
    for (int i = 0; i < S; ++i) order.order[i] = i;
    std::stable_sort(order.order.begin(), order.order.end(),
                     [&](int a, int b) { return fraction[a] > fraction[b]; });
    return order;
}

FrequencyControl priority_control(const PriorityOrder& order, const ModelSpec& spec) {
    if (!is_permutation_order(order, spec.num_states)) {
        throw std::invalid_argument("priority_control: order is not a permutation of the states");
    }
    const std::vector<int> scan = order.order;
    const ModelSpec model = spec;
    return [scan, model](const OccupancyMeasure& x, long long n) {
        const long long budget = budget_for(model, n);
        DiscreteAssignment asg(model.num_states, 2, n);
        long long remaining = budget;
        std::vector<long long> counts(model.num_states);
        for (int i = 0; i < model.num_states; ++i) {
            const double v = x[i] * static_cast<double>(n);
            counts[i] = std::llround(v);
            if (std::abs(v - static_cast<double>(counts[i])) > 1e-6) {
                throw std::invalid_argument("priority_control: x is not a lattice point of X_n");
            }
        }
        for (int i : scan) {
            const long long take = std::min(remaining, counts[i]);
            asg.at(i, 1) = take;
            asg.at(i, 0) = counts[i] - take;
            remaining -= take;
        }
        if (remaining > 0) throw InfeasibleError("priority_control: budget exceeds the population");
        return asg;
    };
}

namespace {

class PriorityAgent final : public AgentPolicy {
  public:
    PriorityAgent(PriorityOrder order, const ModelSpec& spec) : order_(std::move(order)), model_(spec) {
        rank_.assign(model_.num_states, 0);
        for (size_t r = 0; r < order_.order.size(); ++r) rank_[order_.order[r]] = static_cast<int>(r);
    }

    void select_actions(const std::vector<int>& arm_states, const std::vector<long long>& state_counts,
                        Rng& /*rng*/, std::vector<int>& actions) const override {
        const long long n = static_cast<long long>(arm_states.size());
        long long budget = budget_for(model_, n);
        // Whole-state activation counts first, then lowest IDs win inside the
        // boundary state.
        std::vector<long long> take(model_.num_states, 0);
        for (int i : order_.order) {
            take[i] = std::min(budget, state_counts[i]);
            budget -= take[i];
        }
        if (budget > 0) throw InfeasibleError("priority policy: budget exceeds the population");
        std::vector<long long> used(model_.num_states, 0);
        for (size_t m = 0; m < arm_states.size(); ++m) {
            const int s = arm_states[m];
            if (used[s] < take[s]) {
                actions[m] = 1;
                ++used[s];
            } else {
                actions[m] = 0;
            }
        }
    }

  private:
    PriorityOrder order_;
    ModelSpec model_;
    std::vector<int> rank_;
};

class IdPolicy final : public AgentPolicy {
  public:
    IdPolicy(SinglePolicy mu, const ModelSpec& spec) : mu_(std::move(mu)), model_(spec) {}

    void select_actions(const std::vector<int>& arm_states, const std::vector<long long>& /*counts*/,
                        Rng& rng, std::vector<int>& actions) const override {
        const long long n = static_cast<long long>(arm_states.size());
        long long remaining = budget_for(model_, n);
        // Sample every arm first (ID order), then honor samples in ID order
        // while the exact budget stays reachable; the tail gets forced.
        for (long long m = 0; m < n; ++m) {
            actions[m] = rng.categorical(mu_.probs.data() + static_cast<size_t>(arm_states[m]) * mu_.num_actions,
                                         mu_.num_actions);
        }
        for (long long m = 0; m < n; ++m) {
            const long long arms_after = n - m - 1;
            if (actions[m] == 1) {
                if (remaining > 0) {
                    --remaining;
                } else {
                    actions[m] = 0;
                }
            } else if (remaining > arms_after) {
                actions[m] = 1;  // forced: budget cannot be met otherwise
                --remaining;
            }
        }
    }

  private:
    SinglePolicy mu_;
    ModelSpec model_;
};

}  // namespace

std::unique_ptr<AgentPolicy> priority_agent_policy(const PriorityOrder& order, const ModelSpec& spec) {
    if (!is_permutation_order(order, spec.num_states)) {
        throw std::invalid_argument("priority_agent_policy: order is not a permutation of the states");
    }
    return std::make_unique<PriorityAgent>(order, spec);
}

std::unique_ptr<AgentPolicy> id_policy(const SinglePolicy& mu, const ModelSpec& spec) {
    if (!spec.satisfies_bandit_assumption()) {
        throw std::invalid_argument("id_policy requires a bandit instance");
    }
    if (mu.num_actions != 2 || mu.num_states != spec.num_states) {
        throw std::invalid_argument("id_policy: policy shape does not match the model");
    }
    return std::make_unique<IdPolicy>(mu, spec);
}

}  // namespace wcmdp
