#pragma once

#include "wcmdp/types.hpp"

namespace wcmdp {

/// maximize c.x subject to a_eq x = b_eq, a_ub x <= b_ub, x >= 0.
struct LpProblem {
    Vec c;
    Matrix a_eq;
    Vec b_eq;
    Matrix a_ub;
    Vec b_ub;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    Vec x;  // basic feasible (vertex) solution when Optimal
    double value = 0.0;
};

/// Dense two-phase tableau simplex with Bland's anti-cycling rule.
///
/// Bland's rule (always pick the lowest-index candidate for entering and
/// leaving variables) makes the pivot sequence deterministic and guarantees
/// termination on degenerate problems. Redundant rows surviving phase one are
/// dropped. Intended for desk-scale problems; everything is O(m*n) per pivot.
LpResult solve_lp(const LpProblem& problem);

}  // namespace wcmdp
