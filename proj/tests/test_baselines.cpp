#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "wcmdp/baselines.hpp"
#include "wcmdp/discrete.hpp"
#include "wcmdp/relax.hpp"
#include "wcmdp/sim.hpp"

using namespace wcmdp;

TEST_CASE("priority control greedy scan") {
    ModelSpec spec = build_example(Example::Nonindexable);
    spec.eq_rhs[0] = 0.4;  // budget 0.4 for the hand-traced example

    SUBCASE("hand-traced scan with a split boundary state") {
        // priorities (2, 0, 1); occupancies 0.2 at state 2, 0.3 at state 0,
        // 0.5 at state 1; budget 0.4n lands 0.2n on state 2 and 0.2n on state 0
        const FrequencyControl control = priority_control(PriorityOrder{{2, 0, 1}}, spec);
        const long long n = 10;
        const OccupancyMeasure x(Vec{0.3, 0.5, 0.2});
        const DiscreteAssignment asg = control(x, n);
        CHECK(asg.at(2, 1) == 2);
        CHECK(asg.at(0, 1) == 2);
        CHECK(asg.at(1, 1) == 0);
        CHECK(asg.at(0, 0) == 1);
        CHECK(asg.at(1, 0) == 5);
        CHECK(asg.at(2, 0) == 0);
        CHECK(certify(asg, spec).feasible);
    }
    SUBCASE("zero budget leaves everything passive") {
        ModelSpec tiny = spec;
        tiny.eq_rhs[0] = 0.05;  // floor(0.05 * 10) = 0
        const FrequencyControl control = priority_control(PriorityOrder{{0, 1, 2}}, tiny);
        const DiscreteAssignment asg = control(OccupancyMeasure(Vec{0.5, 0.3, 0.2}), 10);
        for (int i = 0; i < 3; ++i) CHECK(asg.at(i, 1) == 0);
    }
    SUBCASE("top state splits when it holds all the mass") {
        const FrequencyControl control = priority_control(PriorityOrder{{1, 0, 2}}, spec);
        OccupancyMeasure x(3);
        x[1] = 1.0;
        const DiscreteAssignment asg = control(x, 10);
        CHECK(asg.at(1, 1) == 4);
        CHECK(asg.at(1, 0) == 6);
    }
    SUBCASE("orders must be permutations") {
        CHECK_THROWS_AS(priority_control(PriorityOrder{{0, 0, 1}}, spec), std::invalid_argument);
        CHECK_THROWS_AS(priority_control(PriorityOrder{{0, 1}}, spec), std::invalid_argument);
    }
    SUBCASE("certificates hold across random occupancies") {
        const FrequencyControl control = priority_control(PriorityOrder{{2, 1, 0}}, spec);
        Rng rng(55);
        for (int trial = 0; trial < 2000; ++trial) {
            const long long n = 5 + static_cast<long long>(rng.next() % 200);
            const OccupancyMeasure x = testutil::random_lattice_point(rng, 3, n);
            const Certificate cert = certify(control(x, n), spec);
            INFO(format_violations(cert.violations));
            REQUIRE(cert.feasible);
        }
    }
}

TEST_CASE("lp priority order ranks by activation fraction") {
    const RelaxationSolution sol = solve_fluid_relaxation(build_example(Example::AttractorFail));
    const PriorityOrder order = lp_priority_order(sol);
    // activation fractions are 1, ~0.3, 0; fully active states come first
    CHECK(order.order == std::vector<int>{0, 1, 2});

    const RelaxationSolution ni = solve_fluid_relaxation(build_example(Example::Nonindexable));
    CHECK(lp_priority_order(ni).order == std::vector<int>{0, 1, 2});
}

TEST_CASE("id policy honors samples in id order under the exact budget") {
    const ModelSpec toy = build_example(Example::TwoStateToy);

    SUBCASE("all-passive samples force the highest ids to activate") {
        SinglePolicy never(2, 2);
        never.at(0, 0) = never.at(1, 0) = 1.0;  // every arm samples action 0
        const auto policy = id_policy(never, toy);
        std::vector<int> states = {0, 0, 1, 1};
        std::vector<long long> counts = {2, 2};
        std::vector<int> actions(4, -1);
        Rng rng(1);
        policy->select_actions(states, counts, rng, actions);
        // budget floor(0.5 * 4) = 2: ids 2 and 3 get overridden
        CHECK(actions == std::vector<int>{0, 0, 1, 1});
    }
    SUBCASE("all-active samples beyond the budget are truncated at high ids") {
        SinglePolicy always(2, 2);
        always.at(0, 1) = always.at(1, 1) = 1.0;
        const auto policy = id_policy(always, toy);
        std::vector<int> states = {0, 1, 0, 1};
        std::vector<long long> counts = {2, 2};
        std::vector<int> actions(4, -1);
        Rng rng(1);
        policy->select_actions(states, counts, rng, actions);
        CHECK(actions == std::vector<int>{1, 1, 0, 0});
    }
    SUBCASE("matching samples are untouched") {
        // deterministic mu activating exactly state 1, occupancy half/half
        SinglePolicy match(2, 2);
        match.at(0, 0) = 1.0;
        match.at(1, 1) = 1.0;
        const auto policy = id_policy(match, toy);
        std::vector<int> states = {1, 0, 1, 0};
        std::vector<long long> counts = {2, 2};
        std::vector<int> actions(4, -1);
        Rng rng(1);
        policy->select_actions(states, counts, rng, actions);
        CHECK(actions == std::vector<int>{1, 0, 1, 0});
    }
    SUBCASE("budget holds on every step of a stochastic run") {
        const ModelSpec ni = build_example(Example::Nonindexable);
        const RelaxationSolution sol = solve_fluid_relaxation(ni);
        const auto policy = id_policy(policy_from_relaxation(sol), ni);
        SimConfig cfg;
        cfg.n = 37;  // floor(0.5 * 37) = 18, a ragged budget
        cfg.horizon = 300;
        cfg.replications = 3;
        cfg.seed = 11;
        cfg.initial = OccupancyMeasure(3);
        cfg.initial[0] = 1.0;
        // simulate_agents certifies the realized allocation every step and
        // would abort on any budget miss
        CHECK_NOTHROW(simulate_agents(ni, *policy, cfg));
    }
}

TEST_CASE("id policy approaches the bound on a well-behaved instance") {
    const ModelSpec ni = build_example(Example::Nonindexable);
    const RelaxationSolution sol = solve_fluid_relaxation(ni);
    const auto policy = id_policy(policy_from_relaxation(sol), ni);
    SimConfig cfg;
    cfg.n = 600;
    cfg.horizon = 1500;
    cfg.replications = 4;
    cfg.seed = 5;
    cfg.initial = OccupancyMeasure(3);
    cfg.initial[0] = 1.0;
    const SimResult result = simulate_agents(ni, *policy, cfg);
    CHECK((sol.gain_bound - result.gain_mean) / sol.gain_bound < 0.02);
}
