#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "wcmdp/discrete.hpp"
#include "wcmdp/fluid.hpp"
#include "wcmdp/relax.hpp"

using namespace wcmdp;

TEST_CASE("inequality rounding") {
    const ModelSpec taxi = build_example(Example::Taxi);
    const RelaxationSolution sol = solve_fluid_relaxation(taxi);
    const FluidControl phi = compose_control(make_control_spec(taxi, sol, policy_from_relaxation(sol)));

    SUBCASE("lattice fluid values pass through unchanged") {
        const long long n = 10;
        OccupancyMeasure x(8);
        x[2] = 0.5;
        x[6] = 0.5;
        StateActionMeasure y(8, 3);
        y.at(2, 1) = 0.3;
        y.at(2, 0) = 0.2;
        y.at(6, 2) = 0.4;
        y.at(6, 0) = 0.1;
        const DiscreteAssignment asg = round_inequality(y, x, n, taxi);
        CHECK(asg.at(2, 1) == 3);
        CHECK(asg.at(2, 0) == 2);
        CHECK(asg.at(6, 2) == 4);
        CHECK(asg.at(6, 0) == 1);
    }
    SUBCASE("zero consuming actions route everything to the free action") {
        OccupancyMeasure x(8);
        x[3] = 1.0;
        StateActionMeasure y(8, 3);
        y.at(3, 0) = 1.0;
        const DiscreteAssignment asg = round_inequality(y, x, 50, taxi);
        CHECK(asg.at(3, 0) == 50);
        long long total = 0;
        for (long long c : asg.counts) total += c;
        CHECK(total == 50);
    }
    SUBCASE("random occupancies stay feasible with gap at most |A|/n") {
        Rng rng(1001);
        for (int trial = 0; trial < 2000; ++trial) {
            const long long n = 8 + static_cast<long long>(rng.next() % 505);
            const OccupancyMeasure x = testutil::random_lattice_point(rng, 8, n);
            const StateActionMeasure y = phi(x);
            const DiscreteAssignment asg = round_inequality(y, x, n, taxi);
            const Certificate cert = certify(asg, taxi, &y);
            INFO("trial " << trial << " n=" << n << "\n" << format_violations(cert.violations));
            REQUIRE(cert.feasible);
            REQUIRE(cert.gap <= 3.0 / static_cast<double>(n) + 1e-12);
        }
    }
    SUBCASE("non-lattice x is rejected") {
        OccupancyMeasure x(8);
        x[0] = 0.5;
        x[1] = 0.5;
        StateActionMeasure y(8, 3);
        y.at(0, 0) = 0.5;
        y.at(1, 0) = 0.5;
        CHECK_THROWS_AS(round_inequality(y, x, 3, taxi), std::invalid_argument);
    }
}

TEST_CASE("bandit rounding") {
    SUBCASE("hand-traced top-up: floors then lowest state first") {
        // two states, n = 4, budget 0.5 -> 2 activations; fluid puts 0.3/0.2
        OccupancyMeasure x(Vec{0.5, 0.5});
        StateActionMeasure y(2, 2);
        y.at(0, 1) = 0.3;
        y.at(1, 1) = 0.2;
        y.at(0, 0) = 0.2;
        y.at(1, 0) = 0.3;
        const DiscreteAssignment asg = round_bandit(y, x, 4, 0.5);
        // floors give (1, 0); the remaining unit goes to state 0 first
        CHECK(asg.at(0, 1) == 2);
        CHECK(asg.at(1, 1) == 0);
        CHECK(asg.at(0, 0) == 0);
        CHECK(asg.at(1, 0) == 2);
    }
    SUBCASE("integral fluid activations are untouched") {
        OccupancyMeasure x(Vec{0.5, 0.5});
        StateActionMeasure y(2, 2);
        y.at(0, 1) = 0.25;
        y.at(1, 1) = 0.25;
        y.at(0, 0) = 0.25;
        y.at(1, 0) = 0.25;
        const DiscreteAssignment asg = round_bandit(y, x, 8, 0.5);
        CHECK(asg.at(0, 1) == 2);
        CHECK(asg.at(1, 1) == 2);
    }
    SUBCASE("budget is hit exactly for random occupancies, gap at most 1/n") {
        const ModelSpec ni = build_example(Example::Nonindexable);
        const RelaxationSolution sol = solve_fluid_relaxation(ni);
        const FluidControl phi = compose_control(make_control_spec(ni, sol, policy_from_relaxation(sol)));
        Rng rng(1002);
        for (int trial = 0; trial < 2000; ++trial) {
            const long long n = 8 + static_cast<long long>(rng.next() % 505);
            const OccupancyMeasure x = testutil::random_lattice_point(rng, 3, n);
            const StateActionMeasure y = phi(x);
            const DiscreteAssignment asg = round_bandit(y, x, n, 0.5);
            long long active = 0;
            for (int i = 0; i < 3; ++i) active += asg.at(i, 1);
            REQUIRE(active == static_cast<long long>(std::floor(0.5 * static_cast<double>(n) + 1e-9)));
            const Certificate cert = certify(asg, ni, &y);
            INFO(format_violations(cert.violations));
            REQUIRE(cert.feasible);
            REQUIRE(cert.gap <= 1.0 / static_cast<double>(n) + 1e-12);
        }
    }
    SUBCASE("unreachable budgets are reported") {
        OccupancyMeasure x(Vec{0.5, 0.5});
        StateActionMeasure y(2, 2);  // no activation mass at all: floors place 0 of 2
        y.at(0, 0) = 0.5;
        y.at(1, 0) = 0.5;
        CHECK_THROWS_AS(round_bandit(y, x, 4, 0.5), std::invalid_argument);
    }
}

TEST_CASE("certificates re-check conditions independently") {
    const ModelSpec ni = build_example(Example::Nonindexable);

    SUBCASE("a correct assignment passes") {
        DiscreteAssignment asg(3, 2, 10);
        asg.at(0, 1) = 3;
        asg.at(1, 1) = 2;
        asg.at(0, 0) = 1;
        asg.at(1, 0) = 2;
        asg.at(2, 0) = 2;
        const Certificate cert = certify(asg, ni);
        CHECK(cert.feasible);
    }
    SUBCASE("negative counts are located") {
        DiscreteAssignment asg(3, 2, 10);
        asg.at(0, 1) = 5;
        asg.at(1, 0) = 6;
        asg.at(2, 0) = -1;
        const Certificate cert = certify(asg, ni);
        CHECK_FALSE(cert.feasible);
        bool found = false;
        for (const auto& v : cert.violations) {
            if (v.field == "counts" && v.action == 0 && v.row == 2) found = true;
        }
        CHECK(found);
    }
    SUBCASE("budget violations are located") {
        DiscreteAssignment asg(3, 2, 10);
        asg.at(0, 1) = 6;  // budget should be 5
        asg.at(1, 0) = 4;
        const Certificate cert = certify(asg, ni);
        CHECK_FALSE(cert.feasible);
        bool found = false;
        for (const auto& v : cert.violations) found = found || v.field == "eq_constraints";
        CHECK(found);
    }
    SUBCASE("inequality violations are located") {
        const ModelSpec taxi = build_example(Example::Taxi);
        DiscreteAssignment asg(8, 3, 10);
        asg.at(0, 2) = 8;  // 80% charging > 70% cap
        asg.at(1, 0) = 2;
        const Certificate cert = certify(asg, taxi);
        CHECK_FALSE(cert.feasible);
        bool found = false;
        for (const auto& v : cert.violations) found = found || v.field == "ineq_constraints";
        CHECK(found);
    }
}
