#include "wcmdp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wcmdp {

namespace {

constexpr double kEps = 1e-9;
constexpr double kPhase1Tol = 1e-7;

struct Tableau {
    int cols = 0;                 // number of variable columns (rhs excluded)
    std::vector<Vec> rows;        // each of size cols + 1, rhs last
    Vec cost;                     // size cols + 1
    std::vector<int> basis;      // basis[i] = column basic in row i

    double& rhs(int r) { return rows[r][cols]; }

    void pivot(int r, int c) {
        Vec& prow = rows[r];
        const double inv = 1.0 / prow[c];
        for (double& v : prow) v *= inv;
        prow[c] = 1.0;  // kill roundoff on the pivot itself
        for (size_t i = 0; i < rows.size(); ++i) {
            if (static_cast<int>(i) == r) continue;
            const double factor = rows[i][c];
            if (factor == 0.0) continue;
            for (int j = 0; j <= cols; ++j) rows[i][j] -= factor * prow[j];
            rows[i][c] = 0.0;
        }
        const double cfac = cost[c];
        if (cfac != 0.0) {
            for (int j = 0; j <= cols; ++j) cost[j] -= cfac * prow[j];
            cost[c] = 0.0;
        }
        basis[r] = c;
    }

    /// Minimizes the cost row. Only columns < enter_limit may enter the basis.
    /// Returns false on unboundedness.
    bool run(int enter_limit) {
        for (;;) {
            int entering = -1;
            for (int j = 0; j < enter_limit; ++j) {
                if (cost[j] < -kEps) {
                    entering = j;
                    break;  // Bland: lowest index
                }
            }
            if (entering < 0) return true;

            int leaving = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (size_t i = 0; i < rows.size(); ++i) {
                const double a = rows[i][entering];
                if (a > kEps) {
                    const double ratio = rows[i][cols] / a;
                    if (ratio < best_ratio - kEps ||
                        (ratio < best_ratio + kEps && (leaving < 0 || basis[i] < basis[leaving]))) {
                        best_ratio = ratio;
                        leaving = static_cast<int>(i);
                    }
                }
            }
            if (leaving < 0) return false;
            pivot(leaving, entering);
        }
    }
};

}  // namespace

LpResult solve_lp(const LpProblem& problem) {
    const int n = static_cast<int>(problem.c.size());
    const int m_eq = problem.a_eq.rows;
    const int m_ub = problem.a_ub.rows;
    const int m = m_eq + m_ub;
    const int n_slack = m_ub;
    const int n_struct = n + n_slack;

    // Assemble rows as [structural | slack | artificial | rhs] with rhs >= 0.
    // Slack columns of sign-flipped inequality rows come out as -1 and cannot
    // seed the basis, so those rows get artificials just like equalities.
    Tableau t;
    t.cols = n_struct + m;  // worst case: one artificial per row
    t.basis.assign(m, -1);
    t.rows.assign(m, Vec(t.cols + 1, 0.0));
    int n_art = 0;
    for (int r = 0; r < m; ++r) {
        Vec& row = t.rows[r];
        double b;
        if (r < m_eq) {
            for (int j = 0; j < n; ++j) row[j] = problem.a_eq(r, j);
            b = problem.b_eq[r];
        } else {
            const int k = r - m_eq;
            for (int j = 0; j < n; ++j) row[j] = problem.a_ub(k, j);
            row[n + k] = 1.0;
            b = problem.b_ub[k];
        }
        if (b < 0.0) {
            for (int j = 0; j < n_struct; ++j) row[j] = -row[j];
            b = -b;
        }
        row[t.cols] = b;
        if (r >= m_eq && row[n + (r - m_eq)] == 1.0) {
            t.basis[r] = n + (r - m_eq);  // slack seeds the basis
        } else {
            const int art = n_struct + n_art++;
            row[art] = 1.0;
            t.basis[r] = art;
        }
    }

    // Phase 1: minimize the sum of artificials.
    t.cost.assign(t.cols + 1, 0.0);
    for (int j = n_struct; j < n_struct + n_art; ++j) t.cost[j] = 1.0;
    for (int r = 0; r < m; ++r) {
        if (t.basis[r] >= n_struct) {
            for (int j = 0; j <= t.cols; ++j) t.cost[j] -= t.rows[r][j];
        }
    }
    if (!t.run(n_struct)) return {LpStatus::Unbounded, {}, 0.0};
    if (-t.cost[t.cols] > kPhase1Tol) return {LpStatus::Infeasible, {}, 0.0};

    // Drive leftover artificials out of the basis; an all-zero pivot row is a
    // redundant constraint and is dropped.
    for (int r = static_cast<int>(t.rows.size()) - 1; r >= 0; --r) {
        if (t.basis[r] < n_struct) continue;
        int col = -1;
        for (int j = 0; j < n_struct; ++j) {
            if (std::abs(t.rows[r][j]) > kEps) {
                col = j;
                break;
            }
        }
        if (col >= 0) {
            t.pivot(r, col);
        } else {
            t.rows.erase(t.rows.begin() + r);
            t.basis.erase(t.basis.begin() + r);
        }
    }

    // Phase 2: minimize -c.x over the structural and slack columns.
    t.cost.assign(t.cols + 1, 0.0);
    for (int j = 0; j < n; ++j) t.cost[j] = -problem.c[j];
    for (size_t r = 0; r < t.rows.size(); ++r) {
        const double cb = t.cost[t.basis[r]];
        if (cb != 0.0) {
            for (int j = 0; j <= t.cols; ++j) t.cost[j] -= cb * t.rows[r][j];
        }
    }
    if (!t.run(n_struct)) return {LpStatus::Unbounded, {}, 0.0};

    LpResult result;
    result.status = LpStatus::Optimal;
    result.x.assign(n, 0.0);
    for (size_t r = 0; r < t.rows.size(); ++r) {
        if (t.basis[r] < n) result.x[t.basis[r]] = std::max(0.0, t.rows[r][t.cols]);
    }
    result.value = 0.0;
    for (int j = 0; j < n; ++j) result.value += problem.c[j] * result.x[j];
    return result;
}

}  // namespace wcmdp
