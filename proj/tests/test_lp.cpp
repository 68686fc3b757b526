#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "wcmdp/lp.hpp"
#include "wcmdp/rng.hpp"

using namespace wcmdp;

namespace {

// Stack equalities and slack-extended inequalities into one A x = b system
// for the brute-force oracle.
testutil::BruteForceLp oracle(const LpProblem& p) {
    const int n = static_cast<int>(p.c.size());
    const int m_eq = p.a_eq.rows;
    const int m_ub = p.a_ub.rows;
    Matrix a(m_eq + m_ub, n + m_ub);
    Vec b(m_eq + m_ub, 0.0);
    Vec c(n + m_ub, 0.0);
    for (int j = 0; j < n; ++j) c[j] = p.c[j];
    for (int r = 0; r < m_eq; ++r) {
        for (int j = 0; j < n; ++j) a(r, j) = p.a_eq(r, j);
        b[r] = p.b_eq[r];
    }
    for (int r = 0; r < m_ub; ++r) {
        for (int j = 0; j < n; ++j) a(m_eq + r, j) = p.a_ub(r, j);
        a(m_eq + r, n + r) = 1.0;
        b[m_eq + r] = p.b_ub[r];
    }
    return testutil::brute_force_lp(c, a, b);
}

}  // namespace

TEST_CASE("simplex agrees with basic-solution enumeration on a dense LP") {
    // max 3x0 + 2x1 s.t. x0 + x1 <= 4, x0 + 3x1 <= 6
    LpProblem p;
    p.c = {3.0, 2.0};
    p.a_eq = Matrix(0, 2);
    p.a_ub = Matrix(2, 2);
    p.a_ub(0, 0) = 1.0;
    p.a_ub(0, 1) = 1.0;
    p.a_ub(1, 0) = 1.0;
    p.a_ub(1, 1) = 3.0;
    p.b_ub = {4.0, 6.0};
    const auto res = solve_lp(p);
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(res.value == doctest::Approx(12.0));
    CHECK(res.x[0] == doctest::Approx(4.0));
    const auto ref = oracle(p);
    CHECK(res.value == doctest::Approx(ref.value));
}

TEST_CASE("simplex detects infeasibility") {
    LpProblem p;
    p.c = {1.0};
    p.a_eq = Matrix(1, 1);
    p.a_eq(0, 0) = 1.0;
    p.b_eq = {2.0};
    p.a_ub = Matrix(1, 1);
    p.a_ub(0, 0) = 1.0;
    p.b_ub = {1.0};
    CHECK(solve_lp(p).status == LpStatus::Infeasible);
}

TEST_CASE("simplex detects unboundedness") {
    LpProblem p;
    p.c = {1.0, 0.0};
    p.a_eq = Matrix(0, 2);
    p.a_ub = Matrix(1, 2);
    p.a_ub(0, 0) = -1.0;
    p.a_ub(0, 1) = 1.0;
    p.b_ub = {1.0};
    CHECK(solve_lp(p).status == LpStatus::Unbounded);
}

TEST_CASE("simplex handles redundant rows and negative right-hand sides") {
    // x0 + x1 = 1 stated twice, plus -x0 <= -0.25 (forces x0 >= 0.25)
    LpProblem p;
    p.c = {1.0, 0.0};
    p.a_eq = Matrix(2, 2);
    for (int r = 0; r < 2; ++r) {
        p.a_eq(r, 0) = 1.0;
        p.a_eq(r, 1) = 1.0;
    }
    p.b_eq = {1.0, 1.0};
    p.a_ub = Matrix(1, 2);
    p.a_ub(0, 0) = -1.0;
    p.b_ub = {-0.25};
    const auto res = solve_lp(p);
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(res.value == doctest::Approx(1.0));

    // flipping the objective exercises the lower bound
    LpProblem q = p;
    q.c = {-1.0, 0.0};
    const auto res2 = solve_lp(q);
    REQUIRE(res2.status == LpStatus::Optimal);
    CHECK(res2.x[0] == doctest::Approx(0.25));
}

TEST_CASE("simplex matches the oracle on random degenerate instances") {
    Rng rng(20240601);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(rng.next() % 4);   // 2..5 vars
        const int m_eq = static_cast<int>(rng.next() % 3);    // 0..2
        const int m_ub = 1 + static_cast<int>(rng.next() % 3);  // 1..3
        LpProblem p;
        p.c.resize(n);
        for (double& v : p.c) v = std::floor(rng.uniform01() * 11) - 5;
        p.a_eq = Matrix(m_eq, n);
        p.b_eq.assign(m_eq, 0.0);
        for (int r = 0; r < m_eq; ++r) {
            // rows built from a feasible point so equality systems are consistent
            for (int j = 0; j < n; ++j) p.a_eq(r, j) = std::floor(rng.uniform01() * 5) - 2;
        }
        p.a_ub = Matrix(m_ub, n);
        p.b_ub.assign(m_ub, 0.0);
        for (int r = 0; r < m_ub; ++r) {
            for (int j = 0; j < n; ++j) p.a_ub(r, j) = std::floor(rng.uniform01() * 5) - 2;
        }
        // pick a nonnegative anchor x0 and set b so it is feasible; integer
        // data plus an integer anchor makes ties (degeneracy) common
        Vec anchor(n);
        for (double& v : anchor) v = std::floor(rng.uniform01() * 3);
        for (int r = 0; r < m_eq; ++r) {
            double dot = 0.0;
            for (int j = 0; j < n; ++j) dot += p.a_eq(r, j) * anchor[j];
            p.b_eq[r] = dot;
        }
        for (int r = 0; r < m_ub; ++r) {
            double dot = 0.0;
            for (int j = 0; j < n; ++j) dot += p.a_ub(r, j) * anchor[j];
            p.b_ub[r] = dot + std::floor(rng.uniform01() * 3);
        }

        const auto res = solve_lp(p);
        const auto ref = oracle(p);
        if (res.status == LpStatus::Unbounded) continue;  // oracle cannot certify unboundedness
        REQUIRE(res.status == LpStatus::Optimal);
        REQUIRE(ref.feasible);
        INFO("trial " << trial);
        CHECK(res.value == doctest::Approx(ref.value).epsilon(1e-7));
        ++checked;
    }
    CHECK(checked > 50);  // the generator must actually produce bounded problems
}

TEST_CASE("solve_lp is deterministic") {
    LpProblem p;
    p.c = {1.0, 1.0, 0.0};
    p.a_eq = Matrix(1, 3);
    p.a_eq(0, 0) = 1.0;
    p.a_eq(0, 1) = 1.0;
    p.a_eq(0, 2) = 1.0;
    p.b_eq = {1.0};
    p.a_ub = Matrix(0, 3);
    const auto r1 = solve_lp(p);
    const auto r2 = solve_lp(p);
    CHECK(r1.x == r2.x);  // multiple optima: the pivot rule must pick the same vertex
}
