#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "wcmdp/model.hpp"
#include "wcmdp/relax.hpp"
#include "wcmdp/types.hpp"

namespace wcmdp {

/// A fluid control: maps state frequencies to feasible state-action
/// frequencies (consistent marginals, limiting constraints satisfied).
using FluidControl = std::function<StateActionMeasure(const OccupancyMeasure&)>;

/// Largest multiple of x* that fits below x, clamped to [0, 1]:
/// min over the support of x(i)/x*(i). Equals 1 iff x matches x* on the
/// support. Closed form, O(|S|).
double alignment(const OccupancyMeasure& x, const OccupancyMeasure& x_star, const std::vector<int>& support);

/// The normalized remainder (x - alignment(x) x*) / (1 - alignment(x)),
/// itself an occupancy measure. Throws std::domain_error when
/// alignment(x) >= 1 - 1e-12; callers must route that case to y* directly.
OccupancyMeasure residual(const OccupancyMeasure& x, const OccupancyMeasure& x_star,
                          const std::vector<int>& support);

/// One transition step: L(y) = sum_a y(a)P(a). Row stochasticity keeps the
/// result on the simplex.
OccupancyMeasure apply_transition(const StateActionMeasure& y, const ModelSpec& spec);

/// Product measure of x and a single-process policy: out(i,a) = x(i) pi(a|i).
StateActionMeasure policy_measure(const OccupancyMeasure& x, const SinglePolicy& pi);

/// Single-process kernel induced by a policy: P_pi(i,j) = sum_a pi(a|i) p(j|i,a).
Matrix policy_kernel(const SinglePolicy& pi, const ModelSpec& spec);

enum class PsiVariant { Inequality, Bandit, Custom };

/// Auxiliary control for resource (inequality) constraints:
///   psi(x, a) = gamma x D_pi(a) + (1 - gamma) [a == 0] x
/// with gamma = min{1, f(k)/E(i,k,a) over nonzero E entries}. The reserved
/// weight on the free action keeps every resource constraint satisfied for
/// all x. Requires the inequality assumption (E >= 0, f > 0, E(0) = 0, no
/// equality constraints); throws std::invalid_argument otherwise.
struct PsiInequality {
    FluidControl psi;
    double gamma = 1.0;
};
PsiInequality make_psi_inequality(const ModelSpec& spec, const SinglePolicy& pi);

/// Auxiliary control for the two-action budget case: a d-weighted mix of the
/// policy measure with a correction chosen so the activation mass is exactly
/// the budget for every x. Requires the bandit assumption.
FluidControl make_psi_bandit(const ModelSpec& spec, const SinglePolicy& pi);

/// Everything needed to assemble the attractor control.
struct FluidControlSpec {
    StateActionMeasure y_star;
    OccupancyMeasure x_star;
    std::vector<int> support;
    SinglePolicy pi;
    PsiVariant variant = PsiVariant::Custom;
    double mix_weight = 0.0;  // gamma for Inequality, the budget d for Bandit
    FluidControl psi;
};

/// Builds the FluidControlSpec for a model that satisfies one of the two
/// structured assumptions, choosing the psi construction accordingly.
FluidControlSpec make_control_spec(const ModelSpec& spec, const RelaxationSolution& sol, const SinglePolicy& pi);

/// Same, with a caller-supplied auxiliary control. Feasibility of psi values
/// is asserted on every evaluation (tolerance 1e-9) since nothing else
/// guarantees it.
FluidControlSpec make_control_spec_custom(const ModelSpec& spec, const RelaxationSolution& sol,
                                          const SinglePolicy& pi, FluidControl psi);

/// The composite control
///   phi(x) = alignment(x) y* + (1 - alignment(x)) psi(residual(x)),
/// with phi(x*) = y*. Keeps the aligned part of x parked on y* and steers
/// only the remainder, so the aligned mass can never decrease along a
/// trajectory.
FluidControl compose_control(const FluidControlSpec& fc);

struct FluidTrajectory {
    std::vector<OccupancyMeasure> x_seq;  // horizon + 1 entries
    std::vector<StateActionMeasure> y_seq;  // horizon entries
    int horizon = 0;
};

/// Iterates y(t) = phi(x(t)), x(t+1) = L(y(t)) for t < horizon.
FluidTrajectory fluid_trajectory(const FluidControl& phi, const OccupancyMeasure& x0, int horizon,
                                 const ModelSpec& spec);

/// Structure report for the policy kernel P_pi: closed communicating classes
/// via strongly connected components, period of the unique closed class via
/// breadth-first level gcd, and whether the support sits inside it.
struct PolicyConditionReport {
    bool unichain = false;
    bool aperiodic = false;
    bool support_in_recurrent = false;
    std::vector<int> recurrent_class;
    int period = 0;  // 0 when not unichain
    int num_closed_classes = 0;
    bool ok() const { return unichain && aperiodic && support_in_recurrent; }
};
PolicyConditionReport check_policy_condition(const SinglePolicy& pi, const ModelSpec& spec,
                                             const std::vector<int>& support);

/// Empirical escape check on the boundary set Z (occupancy measures that
/// vanish somewhere on the support): samples points of every face of Z and
/// iterates L∘psi, reporting the first step whose image has positive mass on
/// the whole support. A sample that fails within the horizon is a potential
/// counterexample, not a proof of failure.
struct EscapeReport {
    int samples = 0;
    std::vector<int> escape_time;  // per sample; -1 = did not escape within horizon
    bool all_escaped = true;
    int min_escape_time = -1;
    int max_escape_time = -1;
};
EscapeReport check_escape_condition(const FluidControl& psi, const ModelSpec& spec,
                                    const std::vector<int>& support, int horizon, int samples,
                                    uint64_t seed);

}  // namespace wcmdp
