#include "wcmdp/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace wcmdp {

namespace {

std::vector<long long> initial_counts(const ModelSpec& spec, const SimConfig& cfg) {
    if (static_cast<int>(cfg.initial.size()) != spec.num_states) {
        throw std::invalid_argument("sim: initial occupancy has the wrong dimension");
    }
    std::vector<long long> counts(spec.num_states);
    long long total = 0;
    for (int i = 0; i < spec.num_states; ++i) {
        const double v = cfg.initial[i] * static_cast<double>(cfg.n);
        counts[i] = std::llround(v);
        if (counts[i] < 0 || std::abs(v - static_cast<double>(counts[i])) > 1e-6) {
            throw std::invalid_argument("sim: n * initial is not integral");
        }
        total += counts[i];
    }
    if (total != cfg.n) throw std::invalid_argument("sim: initial occupancy does not sum to 1");
    return counts;
}

void validate_cfg(const SimConfig& cfg) {
    if (cfg.n < 1) throw std::invalid_argument("sim: n must be positive");
    if (cfg.horizon < 1) throw std::invalid_argument("sim: horizon must be positive");
    if (cfg.effective_burn_in() >= cfg.horizon) throw std::invalid_argument("sim: burn_in must be < horizon");
    if (cfg.replications < 1) throw std::invalid_argument("sim: need at least one replication");
}

double step_reward(const ModelSpec& spec, const DiscreteAssignment& asg) {
    double r = 0.0;
    for (int a = 0; a < spec.num_actions; ++a) {
        for (int i = 0; i < spec.num_states; ++i) {
            const long long c = asg.at(i, a);
            if (c != 0) r += static_cast<double>(c) * spec.rewards[a][i];
        }
    }
    return r / static_cast<double>(asg.n);
}

/// Next-state counts for one (state, action) cell: m independent draws from
/// the kernel row, accumulated. Exactly the per-process construction, just
/// grouped.
void draw_cell(Rng& rng, long long m, const double* row, int S, std::vector<long long>& next) {
    for (long long l = 0; l < m; ++l) next[rng.categorical(row, S)]++;
}

void finalize(SimResult& result) {
    const int reps = static_cast<int>(result.replication_gains.size());
    double mean = 0.0;
    for (double g : result.replication_gains) mean += g;
    mean /= reps;
    double var = 0.0;
    for (double g : result.replication_gains) var += (g - mean) * (g - mean);
    result.gain_mean = mean;
    result.gain_stderr = reps > 1 ? std::sqrt(var / (reps - 1) / reps) : 0.0;
}

template <typename RunReplication>
SimResult run_replicated(const SimConfig& cfg, RunReplication&& run) {
    SimResult result;
    result.n = cfg.n;
    result.horizon = cfg.horizon;
    result.burn_in = cfg.effective_burn_in();
    result.seed = cfg.seed;
    result.replication_gains.assign(cfg.replications, 0.0);

    const int threads = std::max(1, std::min(cfg.threads, cfg.replications));
    if (threads == 1) {
        for (int rep = 0; rep < cfg.replications; ++rep) result.replication_gains[rep] = run(rep, result);
    } else {
        std::exception_ptr error;
        std::vector<std::thread> pool;
        std::atomic<int> next_rep{0};
        std::mutex error_mutex;
        for (int w = 0; w < threads; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const int rep = next_rep.fetch_add(1);
                    if (rep >= cfg.replications) return;
                    try {
                        result.replication_gains[rep] = run(rep, result);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        if (!error) error = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (error) std::rethrow_exception(error);
    }
    finalize(result);
    return result;
}

}  // namespace

SimResult simulate_frequency(const ModelSpec& spec, const FrequencyControl& control, const SimConfig& cfg) {
    validate_cfg(cfg);
    const int S = spec.num_states;
    const int A = spec.num_actions;
    const auto start_counts = initial_counts(spec, cfg);
    const int burn = cfg.effective_burn_in();

    auto run = [&](int rep, SimResult& out) {
        Rng rng(cfg.seed, static_cast<uint64_t>(rep));
        std::vector<long long> counts = start_counts;
        std::vector<long long> next(S);
        OccupancyMeasure x(S);
        const bool record = cfg.record_trajectory && rep == 0;
        if (record) {
            out.trajectory.reserve(cfg.horizon + 1);
        }
        double acc = 0.0;
        for (int t = 0; t < cfg.horizon; ++t) {
            for (int i = 0; i < S; ++i) x[i] = static_cast<double>(counts[i]) / static_cast<double>(cfg.n);
            if (record) out.trajectory.push_back(x.w);

            const DiscreteAssignment asg = control(x, cfg.n);
            const auto marginal = asg.state_counts();
            if (marginal != counts) {
                throw std::runtime_error("simulate_frequency: control output is inconsistent with the state counts");
            }
            const Certificate cert = certify(asg, spec);
            if (!cert.feasible) {
                std::ostringstream os;
                os << "simulate_frequency: infeasible allocation at step " << t << ":\n"
                   << format_violations(cert.violations);
                throw std::runtime_error(os.str());
            }

            if (t >= burn) acc += step_reward(spec, asg);

            std::fill(next.begin(), next.end(), 0);
            for (int a = 0; a < A; ++a) {
                const Matrix& P = spec.transitions[a];
                for (int i = 0; i < S; ++i) {
                    const long long m = asg.at(i, a);
                    if (m > 0) draw_cell(rng, m, P.row(i), S, next);
                }
            }
            counts.swap(next);
        }
        if (record) {
            for (int i = 0; i < S; ++i) x[i] = static_cast<double>(counts[i]) / static_cast<double>(cfg.n);
            out.trajectory.push_back(x.w);
        }
        return acc / static_cast<double>(cfg.horizon - burn);
    };
    return run_replicated(cfg, run);
}

SimResult simulate_agents(const ModelSpec& spec, const AgentPolicy& policy, const SimConfig& cfg) {
    validate_cfg(cfg);
    const int S = spec.num_states;
    const int A = spec.num_actions;
    const int burn = cfg.effective_burn_in();

    std::vector<int> start_states;
    if (!cfg.initial_states.empty()) {
        if (static_cast<long long>(cfg.initial_states.size()) != cfg.n) {
            throw std::invalid_argument("simulate_agents: initial_states size != n");
        }
        start_states = cfg.initial_states;
        for (int s : start_states) {
            if (s < 0 || s >= S) throw std::invalid_argument("simulate_agents: initial state out of range");
        }
    } else {
        // Arms filled in increasing state order: IDs 0..n x(0)-1 start in
        // state 0, and so on.
        const auto counts = initial_counts(spec, cfg);
        start_states.reserve(cfg.n);
        for (int i = 0; i < S; ++i) start_states.insert(start_states.end(), counts[i], i);
    }

    auto run = [&](int rep, SimResult& out) {
        Rng rng(cfg.seed, static_cast<uint64_t>(rep));
        std::vector<int> states = start_states;
        std::vector<int> actions(cfg.n);
        std::vector<long long> counts(S, 0);
        std::vector<std::vector<int>> cell_members(static_cast<size_t>(S) * A);
        const bool record = cfg.record_trajectory && rep == 0;
        double acc = 0.0;
        for (int t = 0; t < cfg.horizon; ++t) {
            std::fill(counts.begin(), counts.end(), 0);
            for (int s : states) counts[s]++;
            if (record) {
                Vec x(S);
                for (int i = 0; i < S; ++i) x[i] = static_cast<double>(counts[i]) / static_cast<double>(cfg.n);
                out.trajectory.push_back(std::move(x));
            }

            policy.select_actions(states, counts, rng, actions);

            DiscreteAssignment asg(S, A, cfg.n);
            for (auto& cell : cell_members) cell.clear();
            for (long long m = 0; m < cfg.n; ++m) {
                const int a = actions[m];
                if (a < 0 || a >= A) throw std::runtime_error("simulate_agents: action out of range");
                asg.at(states[m], a)++;
                cell_members[static_cast<size_t>(a) * S + states[m]].push_back(static_cast<int>(m));
            }
            const Certificate cert = certify(asg, spec);
            if (!cert.feasible) {
                std::ostringstream os;
                os << "simulate_agents: policy violated the constraints at step " << t << ":\n"
                   << format_violations(cert.violations);
                throw std::runtime_error(os.str());
            }
            if (t >= burn) acc += step_reward(spec, asg);

            // Transitions grouped by (action, state) cell, arms in ID order
            // within a cell: the same draw sequence as frequency mode.
            for (int a = 0; a < A; ++a) {
                const Matrix& P = spec.transitions[a];
                for (int i = 0; i < S; ++i) {
                    const double* row = P.row(i);
                    for (int arm : cell_members[static_cast<size_t>(a) * S + i]) {
                        states[arm] = rng.categorical(row, S);
                    }
                }
            }
        }
        if (record) {
            std::fill(counts.begin(), counts.end(), 0);
            for (int s : states) counts[s]++;
            Vec x(S);
            for (int i = 0; i < S; ++i) x[i] = static_cast<double>(counts[i]) / static_cast<double>(cfg.n);
            out.trajectory.push_back(std::move(x));
        }
        return acc / static_cast<double>(cfg.horizon - burn);
    };
    return run_replicated(cfg, run);
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

namespace {

struct Welford {
    long long count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double v) {
        ++count;
        const double delta = v - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (v - mean);
    }
    double stderr_() const {
        if (count < 2) return 0.0;
        return std::sqrt(m2 / static_cast<double>(count - 1) / static_cast<double>(count));
    }
};

}  // namespace

MartingaleReport martingale_diagnostic(const ModelSpec& spec, const FrequencyControl& control,
                                       const SimConfig& cfg) {
    validate_cfg(cfg);
    const int S = spec.num_states;
    const int A = spec.num_actions;
    const int T = cfg.horizon;

    MartingaleReport report;
    report.q_min.assign(S, 1.0);
    report.q_max.assign(S, 0.0);
    for (int j = 0; j < S; ++j) {
        for (int a = 0; a < A; ++a) {
            for (int i = 0; i < S; ++i) {
                const double q = 1.0 - spec.transitions[a](i, j);
                report.q_min[j] = std::min(report.q_min[j], q);
                report.q_max[j] = std::max(report.q_max[j], q);
            }
        }
    }

    // Welford accumulators per (t, j) for z, z^2 and the two bound statistics.
    struct CellAcc {
        Welford z, z2, upper, lower, x;
    };
    std::vector<std::vector<CellAcc>> acc(T, std::vector<CellAcc>(S));

    const auto start_counts = initial_counts(spec, cfg);
    std::vector<long long> next(S);
    for (int rep = 0; rep < cfg.replications; ++rep) {
        Rng rng(cfg.seed, static_cast<uint64_t>(rep));
        std::vector<long long> counts = start_counts;
        OccupancyMeasure x(S);
        for (int t = 0; t < T; ++t) {
            for (int i = 0; i < S; ++i) x[i] = static_cast<double>(counts[i]) / static_cast<double>(cfg.n);
            const DiscreteAssignment asg = control(x, cfg.n);
            const OccupancyMeasure drift = apply_transition(asg.to_measure(), spec);

            std::fill(next.begin(), next.end(), 0);
            for (int a = 0; a < A; ++a) {
                const Matrix& P = spec.transitions[a];
                for (int i = 0; i < S; ++i) {
                    const long long m = asg.at(i, a);
                    if (m > 0) draw_cell(rng, m, P.row(i), S, next);
                }
            }
            counts.swap(next);
            // z(t+1, j) paired with x(t+1, j), accumulated per replication
            for (int j = 0; j < S; ++j) {
                const double xj = static_cast<double>(counts[j]) / static_cast<double>(cfg.n);
                const double z = xj - drift[j];
                auto& cell = acc[t][j];
                cell.z.add(z);
                cell.z2.add(z * z);
                cell.x.add(xj);
                cell.upper.add(z * z - report.q_max[j] / static_cast<double>(cfg.n) * xj);
                cell.lower.add(z * z - report.q_min[j] / static_cast<double>(cfg.n) * xj);
            }
        }
    }

    report.cells.assign(T, std::vector<MartingaleCell>(S));
    for (int t = 0; t < T; ++t) {
        for (int j = 0; j < S; ++j) {
            const auto& a = acc[t][j];
            auto& c = report.cells[t][j];
            c.z_mean = a.z.mean;
            c.z_se = a.z.stderr_();
            c.z2_mean = a.z2.mean;
            c.z2_se = a.z2.stderr_();
            c.bound_lower = report.q_min[j] / static_cast<double>(cfg.n) * a.x.mean;
            c.bound_upper = report.q_max[j] / static_cast<double>(cfg.n) * a.x.mean;
            c.upper_stat = a.upper.mean;
            c.upper_se = a.upper.stderr_();
            c.lower_stat = a.lower.mean;
            c.lower_se = a.lower.stderr_();
            c.within = c.upper_stat <= 3.0 * c.upper_se + 1e-15 && c.lower_stat >= -3.0 * c.lower_se - 1e-15;
            c.mean_zero = std::abs(c.z_mean) <= 3.0 * c.z_se + 1e-15;
            report.all_within = report.all_within && c.within;
            report.mean_zero_ok = report.mean_zero_ok && c.mean_zero;
        }
    }
    return report;
}

MeanFieldReport meanfield_diagnostic(const ModelSpec& spec,
                                     const std::function<FrequencyControl(long long)>& control_family,
                                     const FluidControl& phi, const OccupancyMeasure& x0, int horizon,
                                     const std::vector<long long>& n_values, const SimConfig& base_cfg) {
    if (horizon < 0) throw std::invalid_argument("meanfield_diagnostic: horizon must be >= 0");
    MeanFieldReport report;
    report.n_values = n_values;
    if (horizon == 0) {
        // the initial condition is shared, so the deviation is identically zero
        report.mean_sup_deviation.assign(n_values.size(), 0.0);
        report.stderr_sup_deviation.assign(n_values.size(), 0.0);
        report.strictly_decreasing = false;
        return report;
    }
    const FluidTrajectory fluid = fluid_trajectory(phi, x0, horizon, spec);

    for (long long n : n_values) {
        SimConfig cfg = base_cfg;
        cfg.n = n;
        cfg.horizon = horizon;
        cfg.burn_in = 0;
        cfg.initial = x0;
        cfg.record_trajectory = false;
        validate_cfg(cfg);
        const auto start_counts = initial_counts(spec, cfg);
        const FrequencyControl control = control_family(n);

        Welford sup_dev;
        std::vector<long long> next(spec.num_states);
        for (int rep = 0; rep < cfg.replications; ++rep) {
            Rng rng(cfg.seed, static_cast<uint64_t>(rep));
            std::vector<long long> counts = start_counts;
            OccupancyMeasure x(spec.num_states);
            double dev = 0.0;
            for (int t = 0; t <= horizon; ++t) {
                for (int i = 0; i < spec.num_states; ++i) {
                    x[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
                }
                dev = std::max(dev, x.linf_distance(fluid.x_seq[t]));
                if (t == horizon) break;
                const DiscreteAssignment asg = control(x, n);
                std::fill(next.begin(), next.end(), 0);
                for (int a = 0; a < spec.num_actions; ++a) {
                    const Matrix& P = spec.transitions[a];
                    for (int i = 0; i < spec.num_states; ++i) {
                        const long long m = asg.at(i, a);
                        if (m > 0) draw_cell(rng, m, P.row(i), spec.num_states, next);
                    }
                }
                counts.swap(next);
            }
            sup_dev.add(dev);
        }
        report.mean_sup_deviation.push_back(sup_dev.mean);
        report.stderr_sup_deviation.push_back(sup_dev.stderr_());
    }
    report.strictly_decreasing = true;
    for (size_t k = 0; k + 1 < report.mean_sup_deviation.size(); ++k) {
        if (!(report.mean_sup_deviation[k + 1] < report.mean_sup_deviation[k])) {
            report.strictly_decreasing = false;
        }
    }
    return report;
}

}  // namespace wcmdp
