#pragma once

#include <memory>
#include <vector>

#include "wcmdp/model.hpp"
#include "wcmdp/relax.hpp"
#include "wcmdp/sim.hpp"

namespace wcmdp {

/// State scan order, highest priority first. Must be a permutation of
/// 0..|S|-1.
struct PriorityOrder {
    std::vector<int> order;
};

bool is_permutation_order(const PriorityOrder& order, int num_states);

/// Priority order read off the relaxation: states sorted by decreasing
/// activation fraction y*(i,1)/x*(i), off-support states last, ties broken by
/// state index. This is the standard way a priority policy is derived from
/// the LP when no order is prescribed.
PriorityOrder lp_priority_order(const RelaxationSolution& sol);

/// Frequency-mode priority policy for budget instances: scan states in
/// priority order, activating whole states until exactly floor(d_n n) arms
/// are active; the boundary state splits. Throws InfeasibleError when the
/// budget is not integral or exceeds the population.
FrequencyControl priority_control(const PriorityOrder& order, const ModelSpec& spec);

/// The same policy as an agent rule (lowest-ID arms of the boundary state are
/// activated first). Matched seeds give gains bit-identical to
/// priority_control under simulate_frequency.
std::unique_ptr<AgentPolicy> priority_agent_policy(const PriorityOrder& order, const ModelSpec& spec);

/// Budget policy with permanent arm IDs: every step an action is sampled per
/// arm from mu; sampled actions are honored in increasing ID order as long as
/// the exact budget floor(d_n n) can still be met, and the trailing arms get
/// the action the budget forces. Exactly floor(d_n n) arms take action 1
/// every step.
std::unique_ptr<AgentPolicy> id_policy(const SinglePolicy& mu, const ModelSpec& spec);

}  // namespace wcmdp
