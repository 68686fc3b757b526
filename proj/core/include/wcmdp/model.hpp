#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wcmdp/types.hpp"

namespace wcmdp {

/// How the coupling constraints scale with the number of processes n.
///   Constant:    C_n = C, d_n = d, E_n = E, f_n = f for every n.
///   BanditFloor: single equality budget with d_n = floor(d * n) / n.
enum class FiniteNRule { Constant, BanditFloor };

/// A weakly coupled MDP instance: n statistically identical processes with
/// shared linear constraints on the (state, action) frequencies.
///
/// Conventions:
///   - states are 0..num_states-1, actions 0..num_actions-1
///   - transitions[a](i, j) = P(next = j | state = i, action = a)
///   - rewards[a][i] = per-step reward of action a in state i (action-major)
///   - equality constraints: sum_a y(a) C(a) = d, C(a) is |S| x p
///   - inequality constraints: sum_a y(a) E(a) <= f componentwise, E(a) is |S| x q
/// p = 0 and q = 0 are both legal (unconstrained problem).
struct ModelSpec {
    std::string name;
    int num_states = 0;
    int num_actions = 0;
    std::vector<Matrix> transitions;
    std::vector<Vec> rewards;
    std::vector<Matrix> eq_coeffs;  // one |S| x p matrix per action; empty when p = 0
    Vec eq_rhs;                     // d, length p
    std::vector<Matrix> ineq_coeffs;  // one |S| x q matrix per action; empty when q = 0
    Vec ineq_rhs;                     // f, length q
    FiniteNRule finite_n_rule = FiniteNRule::Constant;

    int num_eq() const { return static_cast<int>(eq_rhs.size()); }
    int num_ineq() const { return static_cast<int>(ineq_rhs.size()); }

    /// Finite-n equality targets: d under Constant, floor(d*n)/n under BanditFloor.
    Vec eq_rhs_n(long long n) const;

    /// Two actions, a single equality budget with C(i,0)=0, C(i,1)=1 and
    /// d in (0,1), no inequality constraints.
    bool satisfies_bandit_assumption() const;

    /// No equality constraints, nonnegative E, strictly positive f, and
    /// action 0 consumes nothing (E(0) = 0).
    bool satisfies_inequality_assumption() const;
};

/// Checks every ModelSpec invariant (shapes, row stochasticity at 1e-12,
/// nonnegativity, constraint dimensions, finite entries). Violations are
/// returned as data; an empty vector means the instance is valid.
std::vector<Violation> validate_model(const ModelSpec& spec);

/// Loads and validates a model from the JSON schema documented in the README.
/// Throws ParseError on malformed input and ValidationError when invariants fail.
ModelSpec load_model(const std::string& path);
ModelSpec parse_model(std::istream& in, const std::string& origin = "<stream>");
void save_model(const ModelSpec& spec, std::ostream& out);

enum class Example { Taxi, Nonindexable, AttractorFail, TwoStateToy };

std::optional<Example> example_from_name(const std::string& name);
std::string example_name(Example which);
std::vector<std::string> example_names();

/// Builds one of the bundled instances. All of them pass validate_model.
ModelSpec build_example(Example which);

}  // namespace wcmdp
