#include <benchmark/benchmark.h>

#include "wcmdp/baselines.hpp"
#include "wcmdp/discrete.hpp"
#include "wcmdp/fluid.hpp"
#include "wcmdp/model.hpp"
#include "wcmdp/relax.hpp"
#include "wcmdp/rng.hpp"
#include "wcmdp/sim.hpp"

using namespace wcmdp;

namespace {

OccupancyMeasure lattice_point(Rng& rng, int dim, long long n) {
    std::vector<long long> counts(dim, 0);
    for (long long k = 0; k < n; ++k) counts[static_cast<int>(rng.next() % dim)]++;
    OccupancyMeasure x(dim);
    for (int i = 0; i < dim; ++i) x[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
    return x;
}

void BM_SolveRelaxationTaxi(benchmark::State& state) {
    const ModelSpec taxi = build_example(Example::Taxi);
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_fluid_relaxation(taxi));
    }
}
BENCHMARK(BM_SolveRelaxationTaxi);

void BM_CompositeControlEval(benchmark::State& state) {
    const ModelSpec taxi = build_example(Example::Taxi);
    const RelaxationSolution sol = solve_fluid_relaxation(taxi);
    const FluidControl phi = compose_control(make_control_spec(taxi, sol, policy_from_relaxation(sol)));
    Rng rng(1);
    const OccupancyMeasure x = lattice_point(rng, 8, 640);
    for (auto _ : state) {
        benchmark::DoNotOptimize(phi(x));
    }
}
BENCHMARK(BM_CompositeControlEval);

void BM_RoundBandit(benchmark::State& state) {
    const ModelSpec ni = build_example(Example::Nonindexable);
    const RelaxationSolution sol = solve_fluid_relaxation(ni);
    const FluidControl phi = compose_control(make_control_spec(ni, sol, policy_from_relaxation(sol)));
    Rng rng(2);
    const long long n = state.range(0);
    const OccupancyMeasure x = lattice_point(rng, 3, n);
    const StateActionMeasure y = phi(x);
    for (auto _ : state) {
        benchmark::DoNotOptimize(round_bandit(y, x, n, 0.5));
    }
}
BENCHMARK(BM_RoundBandit)->Arg(64)->Arg(1024);

void BM_SimulateStepThroughput(benchmark::State& state) {
    // full replications of the fluid-discrete control; reports steps/s
    const ModelSpec ni = build_example(Example::Nonindexable);
    const RelaxationSolution sol = solve_fluid_relaxation(ni);
    const FluidControl phi = compose_control(make_control_spec(ni, sol, policy_from_relaxation(sol)));
    const FrequencyControl control = [&](const OccupancyMeasure& x, long long n) {
        return round_bandit(phi(x), x, n, 0.5);
    };
    SimConfig cfg;
    cfg.n = state.range(0);
    cfg.horizon = 512;
    cfg.burn_in = 0;
    cfg.replications = 1;
    cfg.seed = 3;
    cfg.initial = OccupancyMeasure(3);
    cfg.initial[0] = 1.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_frequency(ni, control, cfg));
    }
    state.SetItemsProcessed(state.iterations() * cfg.horizon);
}
BENCHMARK(BM_SimulateStepThroughput)->Arg(200)->Arg(2000);

void BM_AgentStepThroughput(benchmark::State& state) {
    const ModelSpec ni = build_example(Example::Nonindexable);
    const RelaxationSolution sol = solve_fluid_relaxation(ni);
    const auto policy = id_policy(policy_from_relaxation(sol), ni);
    SimConfig cfg;
    cfg.n = state.range(0);
    cfg.horizon = 512;
    cfg.burn_in = 0;
    cfg.replications = 1;
    cfg.seed = 4;
    cfg.initial = OccupancyMeasure(3);
    cfg.initial[0] = 1.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_agents(ni, *policy, cfg));
    }
    state.SetItemsProcessed(state.iterations() * cfg.horizon);
}
BENCHMARK(BM_AgentStepThroughput)->Arg(200)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
