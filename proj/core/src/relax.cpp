#include "wcmdp/relax.hpp"

#include <cmath>
#include <stdexcept>

#include "wcmdp/lp.hpp"

namespace wcmdp {

namespace {

constexpr double kFeasTol = 1e-8;

int var_index(int state, int action, int num_states) { return action * num_states + state; }

}  // namespace

RelaxationSolution solve_fluid_relaxation(const ModelSpec& spec) {
    const int S = spec.num_states;
    const int A = spec.num_actions;
    const int nv = S * A;
    const int p = spec.num_eq();
    const int q = spec.num_ineq();

    LpProblem lp;
    lp.c.assign(nv, 0.0);
    for (int a = 0; a < A; ++a) {
        for (int i = 0; i < S; ++i) lp.c[var_index(i, a, S)] = spec.rewards[a][i];
    }

    // Balance rows sum to zero across j, so the last one is redundant and is
    // dropped up front; phase one handles any further degeneracy.
    const int m_eq = (S - 1) + p + 1;
    lp.a_eq = Matrix(m_eq, nv);
    lp.b_eq.assign(m_eq, 0.0);
    for (int j = 0; j + 1 < S; ++j) {
        for (int a = 0; a < A; ++a) {
            for (int i = 0; i < S; ++i) lp.a_eq(j, var_index(i, a, S)) += spec.transitions[a](i, j);
            lp.a_eq(j, var_index(j, a, S)) -= 1.0;
        }
    }
    for (int k = 0; k < p; ++k) {
        const int r = (S - 1) + k;
        for (int a = 0; a < A; ++a) {
            for (int i = 0; i < S; ++i) lp.a_eq(r, var_index(i, a, S)) = spec.eq_coeffs[a](i, k);
        }
        lp.b_eq[r] = spec.eq_rhs[k];
    }
    for (int v = 0; v < nv; ++v) lp.a_eq(m_eq - 1, v) = 1.0;  // total mass
    lp.b_eq[m_eq - 1] = 1.0;

    lp.a_ub = Matrix(q, nv);
    lp.b_ub.assign(q, 0.0);
    for (int k = 0; k < q; ++k) {
        for (int a = 0; a < A; ++a) {
            for (int i = 0; i < S; ++i) lp.a_ub(k, var_index(i, a, S)) = spec.ineq_coeffs[a](i, k);
        }
        lp.b_ub[k] = spec.ineq_rhs[k];
    }

    const LpResult res = solve_lp(lp);
    if (res.status == LpStatus::Infeasible) {
        throw InfeasibleError("fluid relaxation is infeasible: the constraint set over Y is empty");
    }
    if (res.status == LpStatus::Unbounded) {
        throw std::logic_error("fluid relaxation reported unbounded; Y is compact, this is a solver bug");
    }

    RelaxationSolution sol;
    sol.y_star = StateActionMeasure(S, A);
    for (int a = 0; a < A; ++a) {
        for (int i = 0; i < S; ++i) sol.y_star.at(i, a) = res.x[var_index(i, a, S)];
    }
    sol.x_star = sol.y_star.state_marginal();
    for (int i = 0; i < S; ++i) {
        if (sol.x_star[i] > kSupportTol) sol.support.push_back(i);
    }
    sol.gain_bound = 0.0;
    for (int a = 0; a < A; ++a) {
        for (int i = 0; i < S; ++i) sol.gain_bound += sol.y_star.at(i, a) * spec.rewards[a][i];
    }

    // Feasibility is re-checked after every solve; a violation here is a
    // solver defect, not a property of the instance.
    Vec balance(S, 0.0);
    for (int a = 0; a < A; ++a) {
        for (int i = 0; i < S; ++i) {
            const double y = sol.y_star.at(i, a);
            for (int j = 0; j < S; ++j) balance[j] += y * spec.transitions[a](i, j);
        }
    }
    double max_resid = std::abs(sol.y_star.total() - 1.0);
    for (int j = 0; j < S; ++j) max_resid = std::max(max_resid, std::abs(balance[j] - sol.x_star[j]));
    sol.eq_residual.assign(p, 0.0);
    for (int k = 0; k < p; ++k) {
        double lhs = 0.0;
        for (int a = 0; a < A; ++a) {
            for (int i = 0; i < S; ++i) lhs += sol.y_star.at(i, a) * spec.eq_coeffs[a](i, k);
        }
        sol.eq_residual[k] = lhs - spec.eq_rhs[k];
        max_resid = std::max(max_resid, std::abs(sol.eq_residual[k]));
    }
    sol.ineq_slack.assign(q, 0.0);
    for (int k = 0; k < q; ++k) {
        double lhs = 0.0;
        for (int a = 0; a < A; ++a) {
            for (int i = 0; i < S; ++i) lhs += sol.y_star.at(i, a) * spec.ineq_coeffs[a](i, k);
        }
        sol.ineq_slack[k] = spec.ineq_rhs[k] - lhs;
        max_resid = std::max(max_resid, std::max(0.0, -sol.ineq_slack[k]));
    }
    if (max_resid > kFeasTol) {
        throw std::logic_error("relaxation solution violates its constraints beyond tolerance");
    }
    return sol;
}

SinglePolicy policy_from_relaxation(const RelaxationSolution& sol) {
    const int S = sol.y_star.num_states;
    const int A = sol.y_star.num_actions;
    SinglePolicy mu(S, A);
    std::vector<bool> in_support(S, false);
    for (int i : sol.support) in_support[i] = true;
    for (int i = 0; i < S; ++i) {
        if (in_support[i]) {
            for (int a = 0; a < A; ++a) mu.at(i, a) = sol.y_star.at(i, a) / sol.x_star[i];
        } else {
            for (int a = 0; a < A; ++a) mu.at(i, a) = 1.0 / A;
        }
    }
    return mu;
}

SinglePolicy uniform_policy(const ModelSpec& spec) {
    SinglePolicy nu(spec.num_states, spec.num_actions);
    for (int i = 0; i < spec.num_states; ++i) {
        for (int a = 0; a < spec.num_actions; ++a) nu.at(i, a) = 1.0 / spec.num_actions;
    }
    return nu;
}

}  // namespace wcmdp
