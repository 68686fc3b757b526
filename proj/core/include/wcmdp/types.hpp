#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace wcmdp {

using Vec = std::vector<double>;

/// Dense row-major matrix. Small problems only; no attempt at sparsity.
struct Matrix {
    int rows = 0;
    int cols = 0;
    Vec data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

    double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }
    double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
};

/// Point of the simplex X: nonnegative state frequencies summing to one.
struct OccupancyMeasure {
    Vec w;

    OccupancyMeasure() = default;
    explicit OccupancyMeasure(Vec weights) : w(std::move(weights)) {}
    explicit OccupancyMeasure(int num_states) : w(num_states, 0.0) {}

    int size() const { return static_cast<int>(w.size()); }
    double& operator[](int i) { return w[i]; }
    double operator[](int i) const { return w[i]; }
    double total() const;
    double linf_distance(const OccupancyMeasure& other) const;
};

/// Point of Y: nonnegative (state, action) frequencies with total mass one.
/// Stored action-major (all states of action 0, then action 1, ...), matching
/// the action-major reward layout.
struct StateActionMeasure {
    int num_states = 0;
    int num_actions = 0;
    Vec w;

    StateActionMeasure() = default;
    StateActionMeasure(int states, int actions)
        : num_states(states), num_actions(actions), w(static_cast<size_t>(states) * actions, 0.0) {}

    double& at(int state, int action) { return w[static_cast<size_t>(action) * num_states + state]; }
    double at(int state, int action) const { return w[static_cast<size_t>(action) * num_states + state]; }

    const double* action_slice(int action) const { return w.data() + static_cast<size_t>(action) * num_states; }
    double* action_slice(int action) { return w.data() + static_cast<size_t>(action) * num_states; }

    double total() const;
    /// x(i) = sum_a y(i, a)
    OccupancyMeasure state_marginal() const;
    double linf_distance(const StateActionMeasure& other) const;
};

/// Stationary single-process policy: probs(i, a) = P(action a | state i).
/// Rows sum to one.
struct SinglePolicy {
    int num_states = 0;
    int num_actions = 0;
    Vec probs;  // state-major: probs[i * num_actions + a]

    SinglePolicy() = default;
    SinglePolicy(int states, int actions)
        : num_states(states), num_actions(actions), probs(static_cast<size_t>(states) * actions, 0.0) {}

    double& at(int state, int action) { return probs[static_cast<size_t>(state) * num_actions + action]; }
    double at(int state, int action) const { return probs[static_cast<size_t>(state) * num_actions + action]; }
};

/// One invariant violation found by a validator, with enough location
/// information to pinpoint the offending entry.
struct Violation {
    std::string field;   // e.g. "transitions", "rewards", "eq_constraints"
    int action = -1;     // -1 when not applicable
    int row = -1;        // state or constraint index, -1 when not applicable
    double magnitude = 0.0;
    std::string message;
};

std::string format_violations(const std::vector<Violation>& violations);

class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(std::vector<Violation> violations);
    const std::vector<Violation>& violations() const { return violations_; }

  private:
    std::vector<Violation> violations_;
};

class InfeasibleError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace wcmdp
