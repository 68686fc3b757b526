#include "wcmdp/discrete.hpp"

#include <cmath>
#include <stdexcept>

namespace wcmdp {

namespace {

constexpr double kFloorNudge = 1e-9;
constexpr double kLatticeTol = 1e-6;

long long nudged_floor(double v) { return static_cast<long long>(std::floor(v + kFloorNudge)); }

bool is_fractional(double v) {
    return std::abs(v - static_cast<double>(nudged_floor(v))) > kFloorNudge;
}

std::vector<long long> lattice_counts(const OccupancyMeasure& x, long long n, const char* who) {
    std::vector<long long> counts(x.size());
    long long total = 0;
    for (int i = 0; i < x.size(); ++i) {
        const double v = x[i] * static_cast<double>(n);
        const long long c = std::llround(v);
        if (std::abs(v - static_cast<double>(c)) > kLatticeTol || c < 0) {
            throw std::invalid_argument(std::string(who) + ": x is not a lattice point of X_n");
        }
        counts[i] = c;
        total += c;
    }
    if (total != n) throw std::invalid_argument(std::string(who) + ": n*x does not sum to n");
    return counts;
}

}  // namespace

StateActionMeasure DiscreteAssignment::to_measure() const {
    StateActionMeasure y(num_states, num_actions);
    for (size_t k = 0; k < counts.size(); ++k) y.w[k] = static_cast<double>(counts[k]) / static_cast<double>(n);
    return y;
}

std::vector<long long> DiscreteAssignment::state_counts() const {
    std::vector<long long> out(num_states, 0);
    for (int a = 0; a < num_actions; ++a) {
        for (int i = 0; i < num_states; ++i) out[i] += at(i, a);
    }
    return out;
}

DiscreteAssignment round_inequality(const StateActionMeasure& y_fluid, const OccupancyMeasure& x,
                                    long long n, const ModelSpec& spec) {
    if (!spec.satisfies_inequality_assumption()) {
        throw std::invalid_argument("round_inequality: model does not satisfy the inequality assumption");
    }
    if (spec.finite_n_rule != FiniteNRule::Constant) {
        throw std::invalid_argument("round_inequality: requires constant finite-n constraints");
    }
    const int S = y_fluid.num_states;
    const int A = y_fluid.num_actions;
    const auto nx = lattice_counts(x, n, "round_inequality");

    DiscreteAssignment out(S, A, n);
    for (int i = 0; i < S; ++i) {
        long long consumed = 0;
        for (int a = 1; a < A; ++a) {
            out.at(i, a) = nudged_floor(static_cast<double>(n) * y_fluid.at(i, a));
            consumed += out.at(i, a);
        }
        out.at(i, 0) = nx[i] - consumed;
        if (out.at(i, 0) < 0) {
            throw std::invalid_argument("round_inequality: fluid value exceeds the state mass");
        }
    }
    return out;
}

DiscreteAssignment round_bandit(const StateActionMeasure& y_fluid, const OccupancyMeasure& x,
                                long long n, double budget) {
    if (y_fluid.num_actions != 2) throw std::invalid_argument("round_bandit: needs exactly two actions");
    const int S = y_fluid.num_states;
    const auto nx = lattice_counts(x, n, "round_bandit");
    const long long target = nudged_floor(budget * static_cast<double>(n));  // floor(d n)

    DiscreteAssignment out(S, 2, n);
    long long placed = 0;
    for (int i = 0; i < S; ++i) {
        out.at(i, 1) = nudged_floor(static_cast<double>(n) * y_fluid.at(i, 1));
        placed += out.at(i, 1);
    }
    long long remaining = target - placed;
    if (remaining < 0) {
        throw std::invalid_argument("round_bandit: fluid activation already exceeds the budget");
    }
    // Top-up pass in increasing state order; only fractional cells may grow,
    // which keeps counts(i,1) <= n x(i).
    for (int i = 0; i < S && remaining > 0; ++i) {
        if (is_fractional(static_cast<double>(n) * y_fluid.at(i, 1))) {
            ++out.at(i, 1);
            --remaining;
        }
    }
    if (remaining != 0) {
        throw std::invalid_argument("round_bandit: budget unreachable; x/d pair is infeasible at this n");
    }
    for (int i = 0; i < S; ++i) {
        out.at(i, 0) = nx[i] - out.at(i, 1);
        if (out.at(i, 0) < 0) {
            throw std::invalid_argument("round_bandit: activation exceeds the state mass");
        }
    }
    return out;
}

Certificate certify(const DiscreteAssignment& assignment, const ModelSpec& spec,
                    const StateActionMeasure* y_fluid) {
    Certificate cert;
    const int S = assignment.num_states;
    const int A = assignment.num_actions;
    const long long n = assignment.n;
    const double nd = static_cast<double>(n);
    constexpr double tol = 1e-9;

    auto fail = [&cert](std::string field, int action, int row, double magnitude, std::string msg) {
        cert.feasible = false;
        cert.violations.push_back(Violation{std::move(field), action, row, magnitude, std::move(msg)});
    };

    if (S != spec.num_states || A != spec.num_actions) {
        fail("shape", -1, -1, 0.0, "assignment shape does not match the model");
        return cert;
    }
    long long total = 0;
    for (int a = 0; a < A; ++a) {
        for (int i = 0; i < S; ++i) {
            const long long c = assignment.at(i, a);
            if (c < 0) fail("counts", a, i, static_cast<double>(c), "negative count");
            total += c;
        }
    }
    if (total != n) fail("counts", -1, -1, static_cast<double>(total - n), "total mass is not n");

    const Vec d_n = spec.eq_rhs_n(n);
    for (int k = 0; k < spec.num_eq(); ++k) {
        double lhs = 0.0;
        for (int a = 0; a < A; ++a) {
            for (int i = 0; i < S; ++i) lhs += static_cast<double>(assignment.at(i, a)) * spec.eq_coeffs[a](i, k);
        }
        const double resid = lhs / nd - d_n[k];
        if (std::abs(resid) > tol) fail("eq_constraints", -1, k, resid, "finite-n equality violated");
    }
    for (int k = 0; k < spec.num_ineq(); ++k) {
        double lhs = 0.0;
        for (int a = 0; a < A; ++a) {
            for (int i = 0; i < S; ++i) lhs += static_cast<double>(assignment.at(i, a)) * spec.ineq_coeffs[a](i, k);
        }
        const double excess = lhs / nd - spec.ineq_rhs[k];
        if (excess > tol) fail("ineq_constraints", -1, k, excess, "finite-n inequality violated");
    }

    if (y_fluid != nullptr) {
        double gap = 0.0;
        for (int a = 0; a < A; ++a) {
            for (int i = 0; i < S; ++i) {
                gap = std::max(gap, std::abs(static_cast<double>(assignment.at(i, a)) / nd - y_fluid->at(i, a)));
            }
        }
        cert.gap = gap;
    }
    return cert;
}

}  // namespace wcmdp
