#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wcmdp/baselines.hpp"
#include "wcmdp/fluid.hpp"
#include "wcmdp/model.hpp"
#include "wcmdp/relax.hpp"
#include "wcmdp/sim.hpp"

namespace wcmdp {

enum class PolicyKind { FluidDiscrete, Priority, LpPriority, Id, CustomFrequency };

struct PolicyChoice {
    PolicyKind kind = PolicyKind::FluidDiscrete;
    std::string pi_choice = "auto";  // FluidDiscrete: "mu" | "uniform" | "auto"
    std::vector<int> order;          // Priority
    std::string label;               // CSV label; defaulted when empty
    FrequencyControl custom;         // CustomFrequency (library API only)
};

struct ExperimentConfig {
    std::string model_name;  // built-in example name, or empty when model_path set
    std::string model_path;
    std::vector<PolicyChoice> policies;
    std::vector<long long> n_list;  // nonempty, strictly increasing
    int horizon = 4000;
    int burn_in = -1;
    int replications = 8;
    uint64_t seed = 1;
    int initial_state = 0;  // all processes start here
    std::string out_dir = ".";
    int threads = 0;  // 0: hardware concurrency
};

ExperimentConfig load_experiment(const std::string& path);

struct SweepCell {
    std::string policy;
    long long n = 0;
    double gain_mean = 0.0;
    double gain_stderr = 0.0;
    double gap = 0.0;  // (gain_bound - gain_mean) / gain_bound
    Vec replication_gains;
};

struct SweepResult {
    std::string model;
    double gain_bound = 0.0;
    std::string chosen_pi;  // "mu", "uniform", or "none" when no fluid policy ran
    PolicyConditionReport mu_report;
    PolicyConditionReport nu_report;
    std::string condition_failure;  // nonempty when the fluid policy was dropped
    std::vector<SweepCell> cells;
    std::string results_csv;
    std::string summary_json;
};

/// Full sweep: solve the relaxation, pick the single-process policy (mu with
/// fallback to the uniform policy, per the structure checker), assemble the
/// rounded fluid control, simulate every (policy, n) cell, and persist
/// results.csv plus summary.json under cfg.out_dir. Cells run on a bounded
/// worker pool; rows are written by a single collector in deterministic
/// order, so identical configs reproduce results.csv byte for byte.
/// Throws InfeasibleError when the relaxation is infeasible and
/// std::invalid_argument on config errors. When the structure condition fails
/// for both candidate policies, the fluid cells are skipped and the failure
/// is reported in condition_failure while baseline policies still run.
SweepResult run_sweep(const ExperimentConfig& cfg);

/// Named presets that regenerate the bundled figure panels:
///   fig1       - taxi fleet, fluid-discrete control against the bound
///   fig2_left  - nonindexable bandit: fluid-discrete, priority, id
///   fig2_right - attractor_fail bandit: fluid-discrete vs priority
/// All of them start every process in state 0 and sweep the standard n grid.
ExperimentConfig reproduce_preset(const std::string& name, const std::string& out_dir);
std::vector<std::string> reproduce_preset_names();

}  // namespace wcmdp
