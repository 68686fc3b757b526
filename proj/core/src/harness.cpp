#include "wcmdp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "wcmdp/discrete.hpp"

namespace wcmdp {

namespace {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string default_label(const PolicyChoice& p) {
    switch (p.kind) {
        case PolicyKind::FluidDiscrete: return "fluid";
        case PolicyKind::Priority: {
            std::string s = "priority(";
            for (size_t i = 0; i < p.order.size(); ++i) {
                if (i) s += ",";
                s += std::to_string(p.order[i]);
            }
            return s + ")";
        }
        case PolicyKind::LpPriority: return "lp-priority";
        case PolicyKind::Id: return "id";
        case PolicyKind::CustomFrequency: return "custom";
    }
    return "?";
}

ModelSpec resolve_model(const ExperimentConfig& cfg) {
    if (!cfg.model_path.empty()) return load_model(cfg.model_path);
    const auto ex = example_from_name(cfg.model_name);
    if (!ex) throw std::invalid_argument("unknown model name: " + cfg.model_name);
    return build_example(*ex);
}

void validate_experiment(const ExperimentConfig& cfg, const ModelSpec& spec) {
    if (cfg.policies.empty()) throw std::invalid_argument("experiment: policy list is empty");
    if (cfg.n_list.empty()) throw std::invalid_argument("experiment: n list is empty");
    for (size_t k = 0; k + 1 < cfg.n_list.size(); ++k) {
        if (cfg.n_list[k] >= cfg.n_list[k + 1]) throw std::invalid_argument("experiment: n list must be increasing");
    }
    if (cfg.initial_state < 0 || cfg.initial_state >= spec.num_states) {
        throw std::invalid_argument("experiment: initial state out of range");
    }
    const bool bandit = spec.satisfies_bandit_assumption();
    for (const auto& p : cfg.policies) {
        switch (p.kind) {
            case PolicyKind::Priority:
                if (!bandit) throw std::invalid_argument("priority policy needs a bandit instance");
                if (!is_permutation_order(PriorityOrder{p.order}, spec.num_states)) {
                    throw std::invalid_argument("priority policy: order is not a state permutation");
                }
                break;
            case PolicyKind::LpPriority:
            case PolicyKind::Id:
                if (!bandit) throw std::invalid_argument("lp-priority/id policies need a bandit instance");
                break;
            case PolicyKind::FluidDiscrete:
                if (!bandit && !spec.satisfies_inequality_assumption()) {
                    throw std::invalid_argument(
                        "fluid-discrete policy needs the bandit or the inequality constraint structure");
                }
                if (p.pi_choice != "auto" && p.pi_choice != "mu" && p.pi_choice != "uniform") {
                    throw std::invalid_argument("fluid policy: pi must be auto, mu or uniform");
                }
                break;
            case PolicyKind::CustomFrequency:
                if (!p.custom) throw std::invalid_argument("custom policy entry without a control");
                break;
        }
    }
}

struct CellJob {
    std::string label;
    long long n = 0;
    bool agent_mode = false;
    FrequencyControl control;            // frequency mode
    const AgentPolicy* agent = nullptr;  // agent mode (owned elsewhere)
};

}  // namespace

ExperimentConfig load_experiment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open experiment file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    ExperimentConfig cfg;
    try {
        const auto& model = j.at("model");
        if (model.is_string()) {
            cfg.model_name = model.get<std::string>();
        } else {
            cfg.model_path = model.at("path").get<std::string>();
        }
        for (const auto& p : j.at("policies")) {
            PolicyChoice choice;
            const std::string type = p.at("type").get<std::string>();
            if (type == "fluid") {
                choice.kind = PolicyKind::FluidDiscrete;
                choice.pi_choice = p.value("pi", std::string("auto"));
            } else if (type == "priority") {
                choice.kind = PolicyKind::Priority;
                for (const auto& v : p.at("order")) choice.order.push_back(v.get<int>());
            } else if (type == "lp_priority") {
                choice.kind = PolicyKind::LpPriority;
            } else if (type == "id") {
                choice.kind = PolicyKind::Id;
            } else {
                throw ParseError("unknown policy type: " + type);
            }
            choice.label = p.value("label", std::string());
            cfg.policies.push_back(std::move(choice));
        }
        for (const auto& v : j.at("n_list")) cfg.n_list.push_back(v.get<long long>());
        cfg.horizon = j.value("horizon", cfg.horizon);
        cfg.burn_in = j.value("burn_in", cfg.burn_in);
        cfg.replications = j.value("replications", cfg.replications);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.initial_state = j.value("initial_state", cfg.initial_state);
        cfg.out_dir = j.value("out_dir", cfg.out_dir);
        cfg.threads = j.value("threads", cfg.threads);
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return cfg;
}

SweepResult run_sweep(const ExperimentConfig& cfg) {
    const ModelSpec spec = resolve_model(cfg);
    {
        auto violations = validate_model(spec);
        if (!violations.empty()) throw ValidationError(std::move(violations));
    }
    validate_experiment(cfg, spec);

    SweepResult result;
    result.model = spec.name.empty() ? std::string("model") : spec.name;

    const RelaxationSolution sol = solve_fluid_relaxation(spec);
    result.gain_bound = sol.gain_bound;

    // Single-process policy selection for the fluid-discrete control: mu read
    // off the relaxation, with the uniform policy as fallback when mu fails
    // the structure condition.
    const SinglePolicy mu = policy_from_relaxation(sol);
    const SinglePolicy nu = uniform_policy(spec);
    result.mu_report = check_policy_condition(mu, spec, sol.support);
    result.nu_report = check_policy_condition(nu, spec, sol.support);
    result.chosen_pi = "none";

    const bool wants_fluid = std::any_of(cfg.policies.begin(), cfg.policies.end(), [](const PolicyChoice& p) {
        return p.kind == PolicyKind::FluidDiscrete;
    });
    FluidControl phi;
    bool fluid_available = false;
    if (wants_fluid) {
        const auto* fluid_choice =
            &*std::find_if(cfg.policies.begin(), cfg.policies.end(),
                           [](const PolicyChoice& p) { return p.kind == PolicyKind::FluidDiscrete; });
        const SinglePolicy* pi = nullptr;
        if (fluid_choice->pi_choice == "mu") {
            pi = &mu;
            result.chosen_pi = "mu";
        } else if (fluid_choice->pi_choice == "uniform") {
            pi = &nu;
            result.chosen_pi = "uniform";
        } else if (result.mu_report.ok()) {
            pi = &mu;
            result.chosen_pi = "mu";
        } else if (result.nu_report.ok()) {
            pi = &nu;
            result.chosen_pi = "uniform";
        }
        if (pi != nullptr) {
            phi = compose_control(make_control_spec(spec, sol, *pi));
            fluid_available = true;
        } else {
            std::ostringstream os;
            os << "structure condition failed for both candidate policies; "
               << "mu: unichain=" << result.mu_report.unichain << " aperiodic=" << result.mu_report.aperiodic
               << " support_in_recurrent=" << result.mu_report.support_in_recurrent
               << "; uniform: unichain=" << result.nu_report.unichain
               << " aperiodic=" << result.nu_report.aperiodic
               << " support_in_recurrent=" << result.nu_report.support_in_recurrent;
            result.condition_failure = os.str();
        }
    }

    const bool bandit = spec.satisfies_bandit_assumption();
    auto fluid_control = [&spec, &phi, bandit](const OccupancyMeasure& x, long long n) {
        const StateActionMeasure y = phi(x);
        return bandit ? round_bandit(y, x, n, spec.eq_rhs[0]) : round_inequality(y, x, n, spec);
    };

    // Owned agent policies, one per (policy entry) reused across n.
    std::vector<std::unique_ptr<AgentPolicy>> owned_agents;
    std::vector<CellJob> jobs;
    for (const auto& p : cfg.policies) {
        const std::string label = p.label.empty() ? default_label(p) : p.label;
        for (long long n : cfg.n_list) {
            CellJob job;
            job.label = label;
            job.n = n;
            switch (p.kind) {
                case PolicyKind::FluidDiscrete:
                    if (!fluid_available) continue;  // reported; baselines still run
                    job.control = fluid_control;
                    break;
                case PolicyKind::Priority:
                    job.control = priority_control(PriorityOrder{p.order}, spec);
                    break;
                case PolicyKind::LpPriority:
                    job.control = priority_control(lp_priority_order(sol), spec);
                    break;
                case PolicyKind::Id:
                    owned_agents.push_back(id_policy(mu, spec));
                    job.agent_mode = true;
                    job.agent = owned_agents.back().get();
                    break;
                case PolicyKind::CustomFrequency:
                    job.control = p.custom;
                    break;
            }
            jobs.push_back(std::move(job));
        }
    }

    // Bounded worker pool over cells; each worker writes only its own slot and
    // the collector below emits rows in job order, so output is reproducible.
    std::vector<SweepCell> cells(jobs.size());
    std::atomic<size_t> next_job{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    const int workers = std::max(1, cfg.threads > 0 ? cfg.threads
                                                    : static_cast<int>(std::thread::hardware_concurrency()));
    auto worker = [&] {
        for (;;) {
            const size_t k = next_job.fetch_add(1);
            if (k >= jobs.size()) return;
            try {
                const CellJob& job = jobs[k];
                SimConfig sim_cfg;
                sim_cfg.n = job.n;
                sim_cfg.horizon = cfg.horizon;
                sim_cfg.burn_in = cfg.burn_in;
                sim_cfg.replications = cfg.replications;
                sim_cfg.seed = cfg.seed;
                sim_cfg.initial = OccupancyMeasure(spec.num_states);
                sim_cfg.initial[cfg.initial_state] = 1.0;
                sim_cfg.threads = 1;  // parallelism lives at the cell level
                const SimResult sim = job.agent_mode ? simulate_agents(spec, *job.agent, sim_cfg)
                                                     : simulate_frequency(spec, job.control, sim_cfg);
                SweepCell cell;
                cell.policy = job.label;
                cell.n = job.n;
                cell.gain_mean = sim.gain_mean;
                cell.gain_stderr = sim.gain_stderr;
                cell.gap = (result.gain_bound - sim.gain_mean) / result.gain_bound;
                cell.replication_gains = sim.replication_gains;
                cells[k] = std::move(cell);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    {
        std::vector<std::thread> pool;
        const size_t pool_size = std::min<size_t>(workers, jobs.size());
        for (size_t w = 0; w < pool_size; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    result.cells = std::move(cells);

    std::filesystem::create_directories(cfg.out_dir);
    const std::string csv_path = (std::filesystem::path(cfg.out_dir) / "results.csv").string();
    {
        std::ofstream csv(csv_path, std::ios::binary);
        if (!csv) throw std::runtime_error("cannot write " + csv_path);
        csv << "model,policy,n,replication,gain\n";
        for (const auto& cell : result.cells) {
            for (size_t rep = 0; rep < cell.replication_gains.size(); ++rep) {
                csv << result.model << "," << cell.policy << "," << cell.n << "," << rep << ","
                    << format_double(cell.replication_gains[rep]) << "\n";
            }
        }
    }
    result.results_csv = csv_path;

    const std::string summary_path = (std::filesystem::path(cfg.out_dir) / "summary.json").string();
    {
        json cells_json = json::array();
        for (const auto& cell : result.cells) {
            cells_json.push_back({{"policy", cell.policy},
                                  {"n", cell.n},
                                  {"gain_mean", cell.gain_mean},
                                  {"gain_stderr", cell.gain_stderr},
                                  {"gap", cell.gap}});
        }
        auto report_json = [](const PolicyConditionReport& r) {
            return json{{"unichain", r.unichain},
                        {"aperiodic", r.aperiodic},
                        {"support_in_recurrent", r.support_in_recurrent},
                        {"period", r.period}};
        };
        json j{{"model", result.model},
               {"gain_bound", result.gain_bound},
               {"chosen_pi", result.chosen_pi},
               {"mu_condition", report_json(result.mu_report)},
               {"uniform_condition", report_json(result.nu_report)},
               {"horizon", cfg.horizon},
               {"burn_in", cfg.burn_in >= 0 ? cfg.burn_in : cfg.horizon / 5},
               {"replications", cfg.replications},
               {"seed", cfg.seed},
               {"initial_state", cfg.initial_state},
               {"cells", std::move(cells_json)}};
        if (!result.condition_failure.empty()) j["condition_failure"] = result.condition_failure;
        std::ofstream out(summary_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + summary_path);
        out << j.dump(2) << "\n";
    }
    result.summary_json = summary_path;
    return result;
}

ExperimentConfig reproduce_preset(const std::string& name, const std::string& out_dir) {
    ExperimentConfig cfg;
    cfg.n_list = {10, 20, 50, 100, 200, 500, 1000, 2000};
    cfg.horizon = 4000;
    cfg.burn_in = 800;
    cfg.replications = 8;
    cfg.seed = 1729;
    cfg.initial_state = 0;  // every process starts empty / in state 0
    cfg.out_dir = out_dir;
    if (name == "fig1") {
        cfg.model_name = "taxi";
        cfg.policies = {PolicyChoice{PolicyKind::FluidDiscrete, "mu", {}, "", nullptr}};
    } else if (name == "fig2_left") {
        cfg.model_name = "nonindexable";
        cfg.policies = {PolicyChoice{PolicyKind::FluidDiscrete, "mu", {}, "", nullptr},
                        PolicyChoice{PolicyKind::LpPriority, "", {}, "", nullptr},
                        PolicyChoice{PolicyKind::Id, "", {}, "", nullptr}};
    } else if (name == "fig2_right") {
        cfg.model_name = "attractor_fail";
        cfg.policies = {PolicyChoice{PolicyKind::FluidDiscrete, "mu", {}, "", nullptr},
                        PolicyChoice{PolicyKind::LpPriority, "", {}, "", nullptr}};
    } else {
        std::string valid;
        for (const auto& v : reproduce_preset_names()) valid += (valid.empty() ? "" : ", ") + v;
        throw std::invalid_argument("unknown preset '" + name + "'; valid names: " + valid);
    }
    return cfg;
}

std::vector<std::string> reproduce_preset_names() { return {"fig1", "fig2_left", "fig2_right"}; }

}  // namespace wcmdp
