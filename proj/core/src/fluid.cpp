#include "wcmdp/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "wcmdp/rng.hpp"

namespace wcmdp {

namespace {

constexpr double kAlignedCutoff = 1.0 - 1e-12;
constexpr double kEdgeTol = 1e-12;     // positive-entry threshold for P_pi digraph
constexpr double kBoundaryTol = 1e-15;  // "positive mass" when checking escape

}  // namespace

double alignment(const OccupancyMeasure& x, const OccupancyMeasure& x_star, const std::vector<int>& support) {
    if (support.empty()) throw std::invalid_argument("alignment: empty support");
    double lambda = 1.0;
    for (int i : support) lambda = std::min(lambda, x[i] / x_star[i]);
    return std::max(0.0, lambda);
}

OccupancyMeasure residual(const OccupancyMeasure& x, const OccupancyMeasure& x_star,
                          const std::vector<int>& support) {
    const double b = alignment(x, x_star, support);
    if (b >= kAlignedCutoff) {
        throw std::domain_error("residual: x is already aligned with x*; use the y* branch");
    }
    const double inv = 1.0 / (1.0 - b);
    OccupancyMeasure z(x.size());
    for (int i = 0; i < x.size(); ++i) z[i] = std::max(0.0, inv * (x[i] - b * x_star[i]));
    return z;
}

OccupancyMeasure apply_transition(const StateActionMeasure& y, const ModelSpec& spec) {
    const int S = spec.num_states;
    OccupancyMeasure out(S);
    for (int a = 0; a < spec.num_actions; ++a) {
        const double* ya = y.action_slice(a);
        const Matrix& P = spec.transitions[a];
        for (int i = 0; i < S; ++i) {
            const double mass = ya[i];
            if (mass == 0.0) continue;
            const double* row = P.row(i);
            for (int j = 0; j < S; ++j) out[j] += mass * row[j];
        }
    }
    return out;
}

StateActionMeasure policy_measure(const OccupancyMeasure& x, const SinglePolicy& pi) {
    StateActionMeasure y(pi.num_states, pi.num_actions);
    for (int i = 0; i < pi.num_states; ++i) {
        for (int a = 0; a < pi.num_actions; ++a) y.at(i, a) = x[i] * pi.at(i, a);
    }
    return y;
}

Matrix policy_kernel(const SinglePolicy& pi, const ModelSpec& spec) {
    const int S = spec.num_states;
    Matrix P(S, S);
    for (int i = 0; i < S; ++i) {
        for (int a = 0; a < spec.num_actions; ++a) {
            const double w = pi.at(i, a);
            if (w == 0.0) continue;
            for (int j = 0; j < S; ++j) P(i, j) += w * spec.transitions[a](i, j);
        }
    }
    return P;
}

PsiInequality make_psi_inequality(const ModelSpec& spec, const SinglePolicy& pi) {
    if (!spec.satisfies_inequality_assumption()) {
        throw std::invalid_argument(
            "inequality construction requires: no equality constraints, E >= 0, f > 0, E(0) = 0");
    }
    double gamma = 1.0;
    for (int a = 0; a < spec.num_actions; ++a) {
        for (int i = 0; i < spec.num_states; ++i) {
            for (int k = 0; k < spec.num_ineq(); ++k) {
                const double e = spec.ineq_coeffs[a](i, k);
                if (e != 0.0) gamma = std::min(gamma, spec.ineq_rhs[k] / e);
            }
        }
    }
    SinglePolicy policy = pi;
    const double g = gamma;
    FluidControl psi = [policy, g](const OccupancyMeasure& x) {
        StateActionMeasure y = policy_measure(x, policy);
        for (double& v : y.w) v *= g;
        double* free_action = y.action_slice(0);
        for (int i = 0; i < x.size(); ++i) free_action[i] += (1.0 - g) * x[i];
        return y;
    };
    return {std::move(psi), gamma};
}

FluidControl make_psi_bandit(const ModelSpec& spec, const SinglePolicy& pi) {
    if (!spec.satisfies_bandit_assumption()) {
        throw std::invalid_argument("bandit construction requires a single 0/1 budget with d in (0,1)");
    }
    const double d = spec.eq_rhs[0];
    Vec active(spec.num_states);  // pi(1|i)
    for (int i = 0; i < spec.num_states; ++i) active[i] = pi.at(i, 1);
    return [d, active](const OccupancyMeasure& x) {
        const int S = x.size();
        double mixed = 0.0, weight = 0.0;
        for (int i = 0; i < S; ++i) {
            mixed += x[i] * d * active[i];
            weight += x[i] * (1.0 - d * active[i]);
        }
        // Correction mass proportional to x(i)(1 - d pi(1|i)), scaled so the
        // total activation is exactly d. The correction alone may leave Y;
        // only the d-weighted mix below is a valid measure.
        const double scale = (d - mixed) / ((1.0 - d) * weight);
        StateActionMeasure y(S, 2);
        for (int i = 0; i < S; ++i) {
            const double slack = x[i] * (1.0 - d * active[i]);
            y.at(i, 1) = x[i] * d * active[i] + (1.0 - d) * scale * slack;
            y.at(i, 0) = x[i] - y.at(i, 1);
        }
        return y;
    };
}

namespace {

FluidControl wrap_with_feasibility_check(FluidControl psi, const ModelSpec& spec) {
    ModelSpec model = spec;  // models are immutable after validation; copy is cheap at this scale
    return [psi = std::move(psi), model](const OccupancyMeasure& x) {
        StateActionMeasure y = psi(x);
        constexpr double tol = 1e-9;
        OccupancyMeasure marginal = y.state_marginal();
        for (int i = 0; i < model.num_states; ++i) {
            if (std::abs(marginal[i] - x[i]) > tol) {
                throw std::runtime_error("custom auxiliary control is inconsistent with its input");
            }
        }
        for (double v : y.w) {
            if (v < -tol) throw std::runtime_error("custom auxiliary control produced negative mass");
        }
        for (int k = 0; k < model.num_eq(); ++k) {
            double lhs = 0.0;
            for (int a = 0; a < model.num_actions; ++a) {
                for (int i = 0; i < model.num_states; ++i) lhs += y.at(i, a) * model.eq_coeffs[a](i, k);
            }
            if (std::abs(lhs - model.eq_rhs[k]) > tol) {
                throw std::runtime_error("custom auxiliary control violates an equality constraint");
            }
        }
        for (int k = 0; k < model.num_ineq(); ++k) {
            double lhs = 0.0;
            for (int a = 0; a < model.num_actions; ++a) {
                for (int i = 0; i < model.num_states; ++i) lhs += y.at(i, a) * model.ineq_coeffs[a](i, k);
            }
            if (lhs > model.ineq_rhs[k] + tol) {
                throw std::runtime_error("custom auxiliary control violates an inequality constraint");
            }
        }
        return y;
    };
}

}  // namespace

FluidControlSpec make_control_spec(const ModelSpec& spec, const RelaxationSolution& sol, const SinglePolicy& pi) {
    FluidControlSpec fc;
    fc.y_star = sol.y_star;
    fc.x_star = sol.x_star;
    fc.support = sol.support;
    fc.pi = pi;
    if (spec.satisfies_bandit_assumption()) {
        fc.variant = PsiVariant::Bandit;
        fc.mix_weight = spec.eq_rhs[0];
        fc.psi = make_psi_bandit(spec, pi);
    } else if (spec.satisfies_inequality_assumption()) {
        fc.variant = PsiVariant::Inequality;
        PsiInequality made = make_psi_inequality(spec, pi);
        fc.mix_weight = made.gamma;
        fc.psi = std::move(made.psi);
    } else {
        throw std::invalid_argument(
            "model satisfies neither structured assumption; use make_control_spec_custom with an explicit psi");
    }
    return fc;
}

FluidControlSpec make_control_spec_custom(const ModelSpec& spec, const RelaxationSolution& sol,
                                          const SinglePolicy& pi, FluidControl psi) {
    FluidControlSpec fc;
    fc.y_star = sol.y_star;
    fc.x_star = sol.x_star;
    fc.support = sol.support;
    fc.pi = pi;
    fc.variant = PsiVariant::Custom;
    fc.psi = wrap_with_feasibility_check(std::move(psi), spec);
    return fc;
}

FluidControl compose_control(const FluidControlSpec& fc) {
    if (!fc.psi) throw std::invalid_argument("compose_control: no auxiliary control");
    if (fc.support.empty()) throw std::invalid_argument("compose_control: empty support");
    return [fc](const OccupancyMeasure& x) {
        const double b = alignment(x, fc.x_star, fc.support);
        if (b >= kAlignedCutoff) return fc.y_star;
        const StateActionMeasure steer = fc.psi(residual(x, fc.x_star, fc.support));
        StateActionMeasure y = fc.y_star;
        for (size_t k = 0; k < y.w.size(); ++k) y.w[k] = b * y.w[k] + (1.0 - b) * steer.w[k];
        return y;
    };
}

FluidTrajectory fluid_trajectory(const FluidControl& phi, const OccupancyMeasure& x0, int horizon,
                                 const ModelSpec& spec) {
    if (horizon < 1) throw std::invalid_argument("fluid_trajectory: horizon must be >= 1");
    FluidTrajectory traj;
    traj.horizon = horizon;
    traj.x_seq.reserve(horizon + 1);
    traj.y_seq.reserve(horizon);
    traj.x_seq.push_back(x0);
    for (int t = 0; t < horizon; ++t) {
        traj.y_seq.push_back(phi(traj.x_seq.back()));
        traj.x_seq.push_back(apply_transition(traj.y_seq.back(), spec));
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Condition checkers
// ---------------------------------------------------------------------------

namespace {

struct SccResult {
    std::vector<int> component;  // state -> scc id
    int count = 0;
};

// Kosaraju; the graphs here have at most a few dozen nodes.
SccResult strongly_connected_components(const std::vector<std::vector<int>>& adj) {
    const int n = static_cast<int>(adj.size());
    std::vector<std::vector<int>> radj(n);
    for (int u = 0; u < n; ++u) {
        for (int v : adj[u]) radj[v].push_back(u);
    }
    std::vector<int> order;
    order.reserve(n);
    std::vector<char> seen(n, 0);
    for (int s = 0; s < n; ++s) {
        if (seen[s]) continue;
        // iterative DFS with explicit post-order
        std::vector<std::pair<int, size_t>> stack{{s, 0}};
        seen[s] = 1;
        while (!stack.empty()) {
            auto& [u, idx] = stack.back();
            if (idx < adj[u].size()) {
                const int v = adj[u][idx++];
                if (!seen[v]) {
                    seen[v] = 1;
                    stack.emplace_back(v, 0);
                }
            } else {
                order.push_back(u);
                stack.pop_back();
            }
        }
    }
    SccResult res;
    res.component.assign(n, -1);
    for (int k = n - 1; k >= 0; --k) {
        const int s = order[k];
        if (res.component[s] >= 0) continue;
        std::vector<int> stack{s};
        res.component[s] = res.count;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v : radj[u]) {
                if (res.component[v] < 0) {
                    res.component[v] = res.count;
                    stack.push_back(v);
                }
            }
        }
        ++res.count;
    }
    return res;
}

int class_period(const std::vector<std::vector<int>>& adj, const std::vector<int>& members) {
    // gcd of (level(u) + 1 - level(v)) over edges inside the class, from a
    // breadth-first labeling; standard period computation.
    const int n = static_cast<int>(adj.size());
    std::vector<int> level(n, -1);
    std::vector<char> inside(n, 0);
    for (int s : members) inside[s] = 1;
    std::vector<int> queue{members.front()};
    level[members.front()] = 0;
    int g = 0;
    for (size_t head = 0; head < queue.size(); ++head) {
        const int u = queue[head];
        for (int v : adj[u]) {
            if (!inside[v]) continue;
            if (level[v] < 0) {
                level[v] = level[u] + 1;
                queue.push_back(v);
            } else {
                g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
            }
        }
    }
    return g == 0 ? static_cast<int>(members.size()) : g;
}

}  // namespace

PolicyConditionReport check_policy_condition(const SinglePolicy& pi, const ModelSpec& spec,
                                             const std::vector<int>& support) {
    const int S = spec.num_states;
    const Matrix P = policy_kernel(pi, spec);
    std::vector<std::vector<int>> adj(S);
    for (int i = 0; i < S; ++i) {
        for (int j = 0; j < S; ++j) {
            if (P(i, j) > kEdgeTol) adj[i].push_back(j);
        }
    }
    const SccResult scc = strongly_connected_components(adj);
    std::vector<char> closed(scc.count, 1);
    for (int u = 0; u < S; ++u) {
        for (int v : adj[u]) {
            if (scc.component[v] != scc.component[u]) closed[scc.component[u]] = 0;
        }
    }
    PolicyConditionReport report;
    int closed_id = -1;
    for (int c = 0; c < scc.count; ++c) {
        if (closed[c]) {
            ++report.num_closed_classes;
            closed_id = c;
        }
    }
    report.unichain = report.num_closed_classes == 1;
    if (!report.unichain) return report;

    for (int i = 0; i < S; ++i) {
        if (scc.component[i] == closed_id) report.recurrent_class.push_back(i);
    }
    report.period = class_period(adj, report.recurrent_class);
    report.aperiodic = report.period == 1;
    report.support_in_recurrent = true;
    for (int i : support) {
        if (scc.component[i] != closed_id) report.support_in_recurrent = false;
    }
    return report;
}

EscapeReport check_escape_condition(const FluidControl& psi, const ModelSpec& spec,
                                    const std::vector<int>& support, int horizon, int samples,
                                    uint64_t seed) {
    if (horizon < 1 || samples < 1) throw std::invalid_argument("check_escape_condition: horizon and samples must be >= 1");
    const int S = spec.num_states;
    EscapeReport report;
    if (S < 2) return report;  // Z is empty: no face to stand on, vacuously escaped

    Rng rng(seed, 0x5afe);
    auto escaped = [&](const OccupancyMeasure& x) {
        for (int i : support) {
            if (!(x[i] > kBoundaryTol)) return false;
        }
        return true;
    };

    // Round-robin over the faces {x(i) = 0}, i in support, with
    // Dirichlet(1,..,1) mass on the remaining coordinates.
    for (int s = 0; s < samples; ++s) {
        const int face = support[s % support.size()];
        OccupancyMeasure z(S);
        double total = 0.0;
        for (int i = 0; i < S; ++i) {
            if (i == face) continue;
            z[i] = -std::log(1.0 - rng.uniform01());
            total += z[i];
        }
        for (int i = 0; i < S; ++i) z[i] /= total;

        int t_escape = -1;
        OccupancyMeasure w = z;
        for (int t = 1; t <= horizon; ++t) {
            w = apply_transition(psi(w), spec);
            if (escaped(w)) {
                t_escape = t;
                break;
            }
        }
        report.escape_time.push_back(t_escape);
        ++report.samples;
        if (t_escape < 0) {
            report.all_escaped = false;
        } else {
            if (report.min_escape_time < 0 || t_escape < report.min_escape_time) report.min_escape_time = t_escape;
            report.max_escape_time = std::max(report.max_escape_time, t_escape);
        }
    }
    return report;
}

}  // namespace wcmdp
