#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "wcmdp/discrete.hpp"
#include "wcmdp/fluid.hpp"
#include "wcmdp/model.hpp"
#include "wcmdp/rng.hpp"
#include "wcmdp/types.hpp"

namespace wcmdp {

/// Frequency-mode policy: assigns every occupancy lattice point a feasible
/// integer allocation.
using FrequencyControl = std::function<DiscreteAssignment(const OccupancyMeasure& x, long long n)>;

/// Agent-mode policy: chooses one action per arm. Arms are identified by
/// their permanent index (ID); state_counts aggregates arm_states.
class AgentPolicy {
  public:
    virtual ~AgentPolicy() = default;
    virtual void select_actions(const std::vector<int>& arm_states,
                                const std::vector<long long>& state_counts, Rng& rng,
                                std::vector<int>& actions) const = 0;
};

struct SimConfig {
    long long n = 100;
    int horizon = 1000;
    int burn_in = -1;  // negative: use horizon / 5
    int replications = 8;
    uint64_t seed = 0;
    OccupancyMeasure initial;              // n * initial must be integral
    std::vector<int> initial_states;       // agent mode alternative: explicit per-arm states
    bool record_trajectory = false;        // keep x_n(t) of replication 0
    int threads = 1;                       // replication-level parallelism

    int effective_burn_in() const { return burn_in >= 0 ? burn_in : horizon / 5; }
};

struct SimResult {
    double gain_mean = 0.0;
    double gain_stderr = 0.0;
    Vec replication_gains;
    std::vector<Vec> trajectory;  // x_n(t) snapshots of replication 0, horizon+1 rows
    long long n = 0;
    int horizon = 0;
    int burn_in = 0;
    uint64_t seed = 0;
};

/// Simulates n coupled processes through their state frequencies. Per step the
/// control fixes the allocation y_n(t); next-state counts are drawn per
/// (state, action) cell as a multinomial over the corresponding kernel row,
/// which has the same law as resampling each process independently. The
/// reward is sum_{i,a} y_n(t,i,a) r(i,a), time-averaged over [burn_in, horizon).
/// Every allocation is re-certified; an infeasible one aborts with the
/// certificate in the message. Replication r uses the derived stream
/// (seed, r), so results do not depend on scheduling.
SimResult simulate_frequency(const ModelSpec& spec, const FrequencyControl& control, const SimConfig& cfg);

/// Same estimators, but every arm is tracked individually and actions come
/// from an agent policy. Constraint compliance is the policy's burden and is
/// asserted every step. Transitions are drawn grouped by (action, state) cell
/// in the same order as frequency mode, so a deterministic policy expressed
/// both ways yields bit-identical gains under matched seeds.
SimResult simulate_agents(const ModelSpec& spec, const AgentPolicy& policy, const SimConfig& cfg);

/// Per-(t, j) second-moment diagnostics of the sampling noise
/// z_n(t+1) = x_n(t+1) - sum_a y_n(t,a)P(a), against the sandwich
///   q_min(j)/n E[x_n(t,j)] <= E[z_n^2(t,j)] <= q_max(j)/n E[x_n(t,j)]
/// with q_min/q_max the extreme one-step exit probabilities. Each bound is
/// tested as a per-replication statistic (z^2 minus the bound) being on the
/// right side of zero within 3 standard errors.
struct MartingaleCell {
    double z_mean = 0.0, z_se = 0.0;
    double z2_mean = 0.0, z2_se = 0.0;
    double bound_lower = 0.0, bound_upper = 0.0;  // q/n * mean x
    double upper_stat = 0.0, upper_se = 0.0;      // mean of z^2 - q_max x / n (should be <= 0)
    double lower_stat = 0.0, lower_se = 0.0;      // mean of z^2 - q_min x / n (should be >= 0)
    bool within = true;
    bool mean_zero = true;
};

struct MartingaleReport {
    Vec q_min, q_max;
    std::vector<std::vector<MartingaleCell>> cells;  // [t-1][j] for t = 1..horizon
    bool all_within = true;
    bool mean_zero_ok = true;
};

MartingaleReport martingale_diagnostic(const ModelSpec& spec, const FrequencyControl& control,
                                       const SimConfig& cfg);

/// Mean over replications of sup_{t <= horizon} |x_n(t) - x(t)|_inf against
/// the fluid trajectory of phi, for each n in n_values.
struct MeanFieldReport {
    std::vector<long long> n_values;
    Vec mean_sup_deviation;
    Vec stderr_sup_deviation;
    bool strictly_decreasing = false;
};

MeanFieldReport meanfield_diagnostic(const ModelSpec& spec,
                                     const std::function<FrequencyControl(long long)>& control_family,
                                     const FluidControl& phi, const OccupancyMeasure& x0, int horizon,
                                     const std::vector<long long>& n_values, const SimConfig& base_cfg);

}  // namespace wcmdp
