// Command-line front end: solve the relaxation, check the attractor
// construction, simulate policies, and run experiment sweeps.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "wcmdp/baselines.hpp"
#include "wcmdp/discrete.hpp"
#include "wcmdp/fluid.hpp"
#include "wcmdp/harness.hpp"
#include "wcmdp/model.hpp"
#include "wcmdp/relax.hpp"
#include "wcmdp/sim.hpp"

namespace {

using nlohmann::json;
using namespace wcmdp;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitValidation = 2;
constexpr int kExitInfeasible = 3;

json measure_to_json(const StateActionMeasure& y) {
    json rows = json::array();
    for (int a = 0; a < y.num_actions; ++a) {
        json row = json::array();
        for (int i = 0; i < y.num_states; ++i) row.push_back(y.at(i, a));
        rows.push_back(std::move(row));
    }
    return rows;
}

json condition_to_json(const PolicyConditionReport& r) {
    return json{{"unichain", r.unichain},
                {"aperiodic", r.aperiodic},
                {"support_in_recurrent", r.support_in_recurrent},
                {"period", r.period},
                {"num_closed_classes", r.num_closed_classes},
                {"recurrent_class", r.recurrent_class},
                {"ok", r.ok()}};
}

int cmd_solve(const std::string& model_path) {
    const ModelSpec spec = load_model(model_path);
    const RelaxationSolution sol = solve_fluid_relaxation(spec);
    json out{{"model", spec.name},
             {"gain_bound", sol.gain_bound},
             {"y_star", measure_to_json(sol.y_star)},
             {"x_star", sol.x_star.w},
             {"support", sol.support},
             {"eq_residual", sol.eq_residual},
             {"ineq_slack", sol.ineq_slack}};
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_fluid_check(const std::string& model_path, const std::string& policy_name) {
    const ModelSpec spec = load_model(model_path);
    const RelaxationSolution sol = solve_fluid_relaxation(spec);
    const SinglePolicy pi = policy_name == "uniform" ? uniform_policy(spec) : policy_from_relaxation(sol);
    const PolicyConditionReport report = check_policy_condition(pi, spec, sol.support);

    json out{{"model", spec.name},
             {"policy", policy_name},
             {"gain_bound", sol.gain_bound},
             {"condition", condition_to_json(report)}};
    if (report.ok()) {
        const FluidControl phi = compose_control(make_control_spec(spec, sol, pi));
        constexpr int kCap = 10000;
        constexpr double kTol = 1e-8;
        json per_vertex = json::array();
        int max_t = -1;
        bool all_converged = true;
        for (int s = 0; s < spec.num_states; ++s) {
            OccupancyMeasure x(spec.num_states);
            x[s] = 1.0;
            int t_conv = -1;
            for (int t = 0; t <= kCap; ++t) {
                if (x.linf_distance(sol.x_star) < kTol) {
                    t_conv = t;
                    break;
                }
                x = apply_transition(phi(x), spec);
            }
            per_vertex.push_back({{"initial_state", s}, {"t_converged", t_conv}});
            all_converged = all_converged && t_conv >= 0;
            max_t = std::max(max_t, t_conv);
        }
        out["convergence"] = {{"tolerance", kTol},
                              {"horizon_cap", kCap},
                              {"all_converged", all_converged},
                              {"max_t", max_t},
                              {"per_vertex", std::move(per_vertex)}};
    }
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_simulate(const std::string& model_path, const std::string& policy_name, long long n, int horizon,
                 int reps, uint64_t seed, int initial_state, const std::string& trace_path) {
    const ModelSpec spec = load_model(model_path);
    const RelaxationSolution sol = solve_fluid_relaxation(spec);

    SimConfig cfg;
    cfg.n = n;
    cfg.horizon = horizon;
    cfg.replications = reps;
    cfg.seed = seed;
    cfg.initial = OccupancyMeasure(spec.num_states);
    if (initial_state < 0 || initial_state >= spec.num_states) {
        throw std::invalid_argument("initial state out of range");
    }
    cfg.initial[initial_state] = 1.0;
    cfg.record_trajectory = !trace_path.empty();

    SimResult result;
    if (policy_name == "fluid" || policy_name == "fluid-mu" || policy_name == "fluid-uniform") {
        SinglePolicy pi;
        if (policy_name == "fluid-uniform") {
            pi = uniform_policy(spec);
        } else if (policy_name == "fluid-mu") {
            pi = policy_from_relaxation(sol);
        } else {
            const SinglePolicy mu = policy_from_relaxation(sol);
            pi = check_policy_condition(mu, spec, sol.support).ok() ? mu : uniform_policy(spec);
        }
        const FluidControl phi = compose_control(make_control_spec(spec, sol, pi));
        const bool bandit = spec.satisfies_bandit_assumption();
        result = simulate_frequency(
            spec,
            [&](const OccupancyMeasure& x, long long n_) {
                const StateActionMeasure y = phi(x);
                return bandit ? round_bandit(y, x, n_, spec.eq_rhs[0]) : round_inequality(y, x, n_, spec);
            },
            cfg);
    } else if (policy_name == "lp-priority") {
        result = simulate_frequency(spec, priority_control(lp_priority_order(sol), spec), cfg);
    } else if (policy_name.rfind("priority=", 0) == 0) {
        PriorityOrder order;
        std::stringstream ss(policy_name.substr(9));
        for (std::string item; std::getline(ss, item, ',');) order.order.push_back(std::stoi(item));
        result = simulate_frequency(spec, priority_control(order, spec), cfg);
    } else if (policy_name == "id") {
        const auto policy = id_policy(policy_from_relaxation(sol), spec);
        result = simulate_agents(spec, *policy, cfg);
    } else {
        throw std::invalid_argument("unknown policy '" + policy_name +
                                    "'; use fluid, fluid-mu, fluid-uniform, lp-priority, priority=i,j,..., id");
    }

    if (!trace_path.empty()) {
        std::ofstream trace(trace_path, std::ios::binary);
        if (!trace) throw std::runtime_error("cannot write " + trace_path);
        trace << "t,state,frequency\n";
        for (size_t t = 0; t < result.trajectory.size(); ++t) {
            for (int i = 0; i < spec.num_states; ++i) {
                char buf[64];
                std::snprintf(buf, sizeof(buf), "%.17g", result.trajectory[t][i]);
                trace << t << "," << i << "," << buf << "\n";
            }
        }
    }

    json out{{"model", spec.name},
             {"policy", policy_name},
             {"n", result.n},
             {"horizon", result.horizon},
             {"burn_in", result.burn_in},
             {"replications", reps},
             {"seed", seed},
             {"gain_mean", result.gain_mean},
             {"gain_stderr", result.gain_stderr},
             {"replication_gains", result.replication_gains},
             {"gain_bound", sol.gain_bound},
             {"gap", (sol.gain_bound - result.gain_mean) / sol.gain_bound}};
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_sweep(const std::string& config_path) {
    const ExperimentConfig cfg = load_experiment(config_path);
    const SweepResult result = run_sweep(cfg);
    json cells = json::array();
    for (const auto& cell : result.cells) {
        cells.push_back({{"policy", cell.policy},
                         {"n", cell.n},
                         {"gain_mean", cell.gain_mean},
                         {"gain_stderr", cell.gain_stderr},
                         {"gap", cell.gap}});
    }
    json out{{"model", result.model},
             {"gain_bound", result.gain_bound},
             {"chosen_pi", result.chosen_pi},
             {"results_csv", result.results_csv},
             {"summary_json", result.summary_json},
             {"cells", std::move(cells)}};
    if (!result.condition_failure.empty()) out["condition_failure"] = result.condition_failure;
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_reproduce(const std::string& name, const std::string& out_dir) {
    const ExperimentConfig cfg = reproduce_preset(name, out_dir);
    const SweepResult result = run_sweep(cfg);
    std::cout << "wrote " << result.results_csv << " and " << result.summary_json << "\n";
    return kExitOk;
}

int cmd_example(const std::string& name, const std::string& emit_path) {
    const auto ex = example_from_name(name);
    if (!ex) {
        std::string valid;
        for (const auto& v : example_names()) valid += (valid.empty() ? "" : ", ") + v;
        throw std::invalid_argument("unknown example '" + name + "'; valid names: " + valid);
    }
    const ModelSpec spec = build_example(*ex);
    if (emit_path.empty()) {
        save_model(spec, std::cout);
    } else {
        std::ofstream out(emit_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + emit_path);
        save_model(spec, out);
        std::cout << "wrote " << emit_path << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weakly coupled MDPs: relaxation bound, fluid-discrete controls, policy simulation"};
    app.require_subcommand(1);

    std::string model_path, policy = "fluid", trace_path, config_path, preset, out_dir = "reproduce_out";
    std::string example_name_arg, emit_path;
    long long n = 100;
    int horizon = 4000, reps = 8, initial_state = 0;
    uint64_t seed = 1;

    auto* solve = app.add_subcommand("solve", "Solve the fluid relaxation of a model file");
    solve->add_option("model", model_path, "model JSON file")->required();

    auto* check = app.add_subcommand("fluid-check", "Check the attractor construction for a model");
    check->add_option("model", model_path, "model JSON file")->required();
    check->add_option("--policy", policy, "single-process policy: mu | uniform")
        ->default_val("mu")
        ->check(CLI::IsMember({"mu", "uniform"}));

    auto* sim = app.add_subcommand("simulate", "Monte-Carlo simulate n coupled processes under a policy");
    sim->add_option("model", model_path, "model JSON file")->required();
    sim->add_option("--policy", policy, "fluid | fluid-mu | fluid-uniform | lp-priority | priority=i,j,... | id")
        ->default_val("fluid");
    sim->add_option("--n", n, "number of processes")->required();
    sim->add_option("--t", horizon, "time horizon")->default_val(4000);
    sim->add_option("--reps", reps, "replications")->default_val(8);
    sim->add_option("--seed", seed, "base seed")->default_val(1);
    sim->add_option("--initial-state", initial_state, "state all processes start in")->default_val(0);
    sim->add_option("--trace", trace_path, "write (t,state,frequency) CSV of replication 0");

    auto* sweep = app.add_subcommand("sweep", "Run an experiment sweep from a config file");
    sweep->add_option("config", config_path, "experiment JSON file")->required();

    auto* repro = app.add_subcommand("reproduce", "Run a bundled experiment preset");
    repro->add_option("name", preset, "fig1 | fig2_left | fig2_right")->required();
    repro->add_option("--out", out_dir, "output directory")->default_val("reproduce_out");

    auto* example = app.add_subcommand("example", "Emit a bundled model instance as JSON");
    example->add_option("name", example_name_arg, "taxi | nonindexable | attractor_fail | two_state_toy")
        ->required();
    example->add_option("--emit", emit_path, "output path (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(model_path);
        if (check->parsed()) return cmd_fluid_check(model_path, policy);
        if (sim->parsed()) return cmd_simulate(model_path, policy, n, horizon, reps, seed, initial_state, trace_path);
        if (sweep->parsed()) return cmd_sweep(config_path);
        if (repro->parsed()) return cmd_reproduce(preset, out_dir);
        if (example->parsed()) return cmd_example(example_name_arg, emit_path);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
