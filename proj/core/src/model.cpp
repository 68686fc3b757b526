#include "wcmdp/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace wcmdp {

namespace {

constexpr double kRowSumTol = 1e-12;

void append(std::vector<Violation>& out, std::string field, int action, int row, double magnitude,
            std::string message) {
    out.push_back(Violation{std::move(field), action, row, magnitude, std::move(message)});
}

}  // namespace

double OccupancyMeasure::total() const {
    double s = 0.0;
    for (double v : w) s += v;
    return s;
}

double OccupancyMeasure::linf_distance(const OccupancyMeasure& other) const {
    double m = 0.0;
    for (size_t i = 0; i < w.size(); ++i) m = std::max(m, std::abs(w[i] - other.w[i]));
    return m;
}

double StateActionMeasure::total() const {
    double s = 0.0;
    for (double v : w) s += v;
    return s;
}

OccupancyMeasure StateActionMeasure::state_marginal() const {
    OccupancyMeasure x(num_states);
    for (int a = 0; a < num_actions; ++a) {
        const double* ya = action_slice(a);
        for (int i = 0; i < num_states; ++i) x[i] += ya[i];
    }
    return x;
}

double StateActionMeasure::linf_distance(const StateActionMeasure& other) const {
    double m = 0.0;
    for (size_t i = 0; i < w.size(); ++i) m = std::max(m, std::abs(w[i] - other.w[i]));
    return m;
}

std::string format_violations(const std::vector<Violation>& violations) {
    std::ostringstream os;
    for (const auto& v : violations) {
        os << v.field;
        if (v.action >= 0) os << "[action " << v.action << "]";
        if (v.row >= 0) os << "[row " << v.row << "]";
        os << ": " << v.message << " (magnitude " << v.magnitude << ")\n";
    }
    return os.str();
}

ValidationError::ValidationError(std::vector<Violation> violations)
    : std::runtime_error("model validation failed:\n" + format_violations(violations)),
      violations_(std::move(violations)) {}

Vec ModelSpec::eq_rhs_n(long long n) const {
    if (finite_n_rule == FiniteNRule::Constant || eq_rhs.empty()) return eq_rhs;
    Vec out(eq_rhs.size());
    for (size_t k = 0; k < eq_rhs.size(); ++k) {
        out[k] = std::floor(eq_rhs[k] * static_cast<double>(n) + 1e-9) / static_cast<double>(n);
    }
    return out;
}

bool ModelSpec::satisfies_bandit_assumption() const {
    if (num_actions != 2 || num_eq() != 1 || num_ineq() != 0) return false;
    if (!(eq_rhs[0] > 0.0 && eq_rhs[0] < 1.0)) return false;
    for (int i = 0; i < num_states; ++i) {
        if (eq_coeffs[0](i, 0) != 0.0) return false;
        if (eq_coeffs[1](i, 0) != 1.0) return false;
    }
    return true;
}

bool ModelSpec::satisfies_inequality_assumption() const {
    if (num_eq() != 0 || num_ineq() == 0) return false;
    for (double fk : ineq_rhs) {
        if (!(fk > 0.0)) return false;
    }
    for (int a = 0; a < num_actions; ++a) {
        for (int i = 0; i < num_states; ++i) {
            for (int k = 0; k < num_ineq(); ++k) {
                const double e = ineq_coeffs[a](i, k);
                if (e < 0.0) return false;
                if (a == 0 && e != 0.0) return false;
            }
        }
    }
    return true;
}

std::vector<Violation> validate_model(const ModelSpec& spec) {
    std::vector<Violation> out;
    if (spec.num_states < 1) append(out, "num_states", -1, -1, spec.num_states, "must be positive");
    if (spec.num_actions < 1) append(out, "num_actions", -1, -1, spec.num_actions, "must be positive");
    if (!out.empty()) return out;

    const int S = spec.num_states;
    const int A = spec.num_actions;

    if (static_cast<int>(spec.transitions.size()) != A) {
        append(out, "transitions", -1, -1, spec.transitions.size(), "need one matrix per action");
        return out;
    }
    for (int a = 0; a < A; ++a) {
        const Matrix& P = spec.transitions[a];
        if (P.rows != S || P.cols != S) {
            append(out, "transitions", a, -1, 0.0, "matrix is not |S| x |S|");
            continue;
        }
        for (int i = 0; i < S; ++i) {
            double sum = 0.0;
            for (int j = 0; j < S; ++j) {
                const double p = P(i, j);
                if (!std::isfinite(p)) append(out, "transitions", a, i, p, "non-finite probability");
                if (p < 0.0) append(out, "transitions", a, i, p, "negative probability");
                sum += p;
            }
            if (std::abs(sum - 1.0) > kRowSumTol) {
                append(out, "transitions", a, i, sum - 1.0, "row does not sum to 1");
            }
        }
    }

    if (static_cast<int>(spec.rewards.size()) != A) {
        append(out, "rewards", -1, -1, spec.rewards.size(), "need one row per action");
    } else {
        for (int a = 0; a < A; ++a) {
            if (static_cast<int>(spec.rewards[a].size()) != S) {
                append(out, "rewards", a, -1, spec.rewards[a].size(), "row length is not |S|");
                continue;
            }
            for (int i = 0; i < S; ++i) {
                if (!std::isfinite(spec.rewards[a][i])) {
                    append(out, "rewards", a, i, spec.rewards[a][i], "non-finite reward");
                }
            }
        }
    }

    const int p = spec.num_eq();
    if (p > 0) {
        if (static_cast<int>(spec.eq_coeffs.size()) != A) {
            append(out, "eq_constraints", -1, -1, spec.eq_coeffs.size(), "need one C matrix per action");
        } else {
            for (int a = 0; a < A; ++a) {
                if (spec.eq_coeffs[a].rows != S || spec.eq_coeffs[a].cols != p) {
                    append(out, "eq_constraints", a, -1, 0.0, "C matrix is not |S| x p");
                }
            }
        }
        for (int k = 0; k < p; ++k) {
            if (!std::isfinite(spec.eq_rhs[k])) append(out, "eq_constraints", -1, k, spec.eq_rhs[k], "non-finite d entry");
        }
    } else if (!spec.eq_coeffs.empty()) {
        append(out, "eq_constraints", -1, -1, spec.eq_coeffs.size(), "C matrices present but d is empty");
    }

    const int q = spec.num_ineq();
    if (q > 0) {
        if (static_cast<int>(spec.ineq_coeffs.size()) != A) {
            append(out, "ineq_constraints", -1, -1, spec.ineq_coeffs.size(), "need one E matrix per action");
        } else {
            for (int a = 0; a < A; ++a) {
                if (spec.ineq_coeffs[a].rows != S || spec.ineq_coeffs[a].cols != q) {
                    append(out, "ineq_constraints", a, -1, 0.0, "E matrix is not |S| x q");
                }
            }
        }
        for (int k = 0; k < q; ++k) {
            if (!std::isfinite(spec.ineq_rhs[k])) append(out, "ineq_constraints", -1, k, spec.ineq_rhs[k], "non-finite f entry");
        }
    } else if (!spec.ineq_coeffs.empty()) {
        append(out, "ineq_constraints", -1, -1, spec.ineq_coeffs.size(), "E matrices present but f is empty");
    }

    if (spec.finite_n_rule == FiniteNRule::BanditFloor && out.empty() && !spec.satisfies_bandit_assumption()) {
        append(out, "finite_n_rule", -1, -1, 0.0,
               "bandit_floor requires a single 0/1 equality budget with d in (0,1) and no inequality constraints");
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON I/O
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

Matrix matrix_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.empty()) throw ParseError(std::string(what) + ": expected a nonempty 2d array");
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols) {
            throw ParseError(std::string(what) + ": ragged rows");
        }
        for (int c = 0; c < cols; ++c) {
            if (!j[r][c].is_number()) throw ParseError(std::string(what) + ": non-numeric entry");
            m(r, c) = j[r][c].get<double>();
        }
    }
    return m;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows; ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols; ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

ModelSpec parse_model(std::istream& in, const std::string& origin) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(origin + ": " + e.what());
    }
    ModelSpec spec;
    try {
        spec.num_states = j.at("num_states").get<int>();
        spec.num_actions = j.at("num_actions").get<int>();
        const auto& trans = j.at("transitions");
        for (const auto& t : trans) spec.transitions.push_back(matrix_from_json(t, "transitions"));
        for (const auto& r : j.at("rewards")) {
            Vec row;
            for (const auto& v : r) {
                if (!v.is_number()) throw ParseError("rewards: non-numeric entry");
                row.push_back(v.get<double>());
            }
            spec.rewards.push_back(std::move(row));
        }
        if (j.contains("eq_constraints") && !j["eq_constraints"].is_null()) {
            for (const auto& c : j["eq_constraints"].at("C")) {
                spec.eq_coeffs.push_back(matrix_from_json(c, "eq_constraints.C"));
            }
            for (const auto& v : j["eq_constraints"].at("d")) spec.eq_rhs.push_back(v.get<double>());
        }
        if (j.contains("ineq_constraints") && !j["ineq_constraints"].is_null()) {
            for (const auto& c : j["ineq_constraints"].at("E")) {
                spec.ineq_coeffs.push_back(matrix_from_json(c, "ineq_constraints.E"));
            }
            for (const auto& v : j["ineq_constraints"].at("f")) spec.ineq_rhs.push_back(v.get<double>());
        }
        const std::string rule = j.value("finite_n_rule", std::string("constant"));
        if (rule == "constant") {
            spec.finite_n_rule = FiniteNRule::Constant;
        } else if (rule == "bandit_floor") {
            spec.finite_n_rule = FiniteNRule::BanditFloor;
        } else {
            throw ParseError("finite_n_rule: expected \"constant\" or \"bandit_floor\", got \"" + rule + "\"");
        }
    } catch (const json::exception& e) {
        throw ParseError(origin + ": " + e.what());
    }
    auto violations = validate_model(spec);
    if (!violations.empty()) throw ValidationError(std::move(violations));
    return spec;
}

ModelSpec load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file: " + path);
    ModelSpec spec = parse_model(in, path);
    // Model label used in experiment outputs: the file stem.
    auto slash = path.find_last_of("/\\");
    std::string stem = slash == std::string::npos ? path : path.substr(slash + 1);
    auto dot = stem.find_last_of('.');
    if (dot != std::string::npos) stem = stem.substr(0, dot);
    spec.name = stem;
    return spec;
}

void save_model(const ModelSpec& spec, std::ostream& out) {
    json j;
    j["num_states"] = spec.num_states;
    j["num_actions"] = spec.num_actions;
    j["transitions"] = json::array();
    for (const auto& P : spec.transitions) j["transitions"].push_back(matrix_to_json(P));
    j["rewards"] = spec.rewards;
    if (spec.num_eq() > 0) {
        json c = json::array();
        for (const auto& C : spec.eq_coeffs) c.push_back(matrix_to_json(C));
        j["eq_constraints"] = {{"C", std::move(c)}, {"d", spec.eq_rhs}};
    }
    if (spec.num_ineq() > 0) {
        json e = json::array();
        for (const auto& E : spec.ineq_coeffs) e.push_back(matrix_to_json(E));
        j["ineq_constraints"] = {{"E", std::move(e)}, {"f", spec.ineq_rhs}};
    }
    j["finite_n_rule"] = spec.finite_n_rule == FiniteNRule::Constant ? "constant" : "bandit_floor";
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Bundled examples
// ---------------------------------------------------------------------------

namespace {

/// Poisson(mean) probabilities pmf(0..count-1), computed by the usual
/// multiplicative recurrence.
Vec poisson_pmf(double mean, int count) {
    Vec pmf(count);
    pmf[0] = std::exp(-mean);
    for (int k = 1; k < count; ++k) pmf[k] = pmf[k - 1] * mean / k;
    return pmf;
}

ModelSpec bandit_instance(std::string name, Matrix passive, Matrix active, Vec active_reward, double budget) {
    const int S = passive.rows;
    ModelSpec spec;
    spec.name = std::move(name);
    spec.num_states = S;
    spec.num_actions = 2;
    spec.transitions = {std::move(passive), std::move(active)};
    spec.rewards = {Vec(S, 0.0), std::move(active_reward)};
    Matrix c0(S, 1, 0.0), c1(S, 1, 1.0);
    spec.eq_coeffs = {std::move(c0), std::move(c1)};
    spec.eq_rhs = {budget};
    spec.finite_n_rule = FiniteNRule::BanditFloor;
    return spec;
}

/// Rows are stored as printed (four decimals) and then renormalized: the
/// printed digits of the second instance sum to 1 +- 1e-4 per row, which the
/// row-stochasticity invariant would reject.
Matrix renormalized(std::initializer_list<std::initializer_list<double>> rows) {
    const int n = static_cast<int>(rows.size());
    Matrix m(n, n);
    int r = 0;
    for (const auto& row : rows) {
        double sum = 0.0;
        for (double v : row) sum += v;
        int c = 0;
        for (double v : row) m(r, c++) = v / sum;
        ++r;
    }
    return m;
}

ModelSpec build_taxi() {
    // Fleet of electric taxis. States are battery levels 0..7; actions are
    // 0 = deploy at the airport, 1 = deploy downtown, 2 = charge.
    const int S = 8;
    ModelSpec spec;
    spec.name = "taxi";
    spec.num_states = S;
    spec.num_actions = 3;

    const double mean_drain[2] = {2.0, 1.0};
    const double fare_airport = 3.0, fare_city = 2.5;
    const double penalty_airport = 3.0, penalty_city = 2.0, charge_cost = 2.0;

    spec.transitions.assign(3, Matrix(S, S));
    for (int a = 0; a < 2; ++a) {
        const Vec pmf = poisson_pmf(mean_drain[a], S);
        for (int i = 0; i < S; ++i) {
            // next level = max(i - drain, 0); the tail P(drain >= i) lumps at
            // level 0 so each row sums to one exactly.
            double below = 0.0;
            for (int k = 0; k < i; ++k) below += pmf[k];
            for (int j = 1; j <= i; ++j) spec.transitions[a](i, j) = pmf[i - j];
            spec.transitions[a](i, 0) = 1.0 - below;
        }
    }
    for (int i = 0; i < S; ++i) spec.transitions[2](i, std::min(i + 2, S - 1)) = 1.0;

    spec.rewards.assign(3, Vec(S, 0.0));
    const Vec pmf0 = poisson_pmf(mean_drain[0], S);
    const Vec pmf1 = poisson_pmf(mean_drain[1], S);
    for (int i = 0; i < S; ++i) {
        double survive0 = 0.0;  // P(drain < i) at the airport
        for (int k = 0; k < i; ++k) survive0 += pmf0[k];
        spec.rewards[0][i] = fare_airport * survive0 - penalty_airport * (1.0 - survive0);

        double fare_units = 0.0;  // E[drain * 1{drain < i}] downtown
        double survive1 = 0.0;
        for (int k = 0; k < i; ++k) {
            fare_units += k * pmf1[k];
            survive1 += pmf1[k];
        }
        spec.rewards[1][i] = fare_city * fare_units - penalty_city * (1.0 - survive1);
        spec.rewards[2][i] = -charge_cost;
    }

    // At most 70% of the fleet can charge; at least 10% must be at the
    // airport, written as "downtown + charging <= 90%" so that action 0 is
    // the resource-free action.
    spec.ineq_coeffs.assign(3, Matrix(S, 2));
    for (int i = 0; i < S; ++i) {
        spec.ineq_coeffs[2](i, 0) = 1.0;
        spec.ineq_coeffs[1](i, 1) = 1.0;
        spec.ineq_coeffs[2](i, 1) = 1.0;
    }
    spec.ineq_rhs = {0.7, 0.9};
    spec.finite_n_rule = FiniteNRule::Constant;
    return spec;
}

ModelSpec build_nonindexable() {
    Matrix p0 = renormalized({{0.0050, 0.7930, 0.2020},
                              {0.0270, 0.5580, 0.4150},
                              {0.7360, 0.2490, 0.0150}});
    Matrix p1 = renormalized({{0.7180, 0.2540, 0.0280},
                              {0.3470, 0.0970, 0.5560},
                              {0.0150, 0.9560, 0.0290}});
    return bandit_instance("nonindexable", std::move(p0), std::move(p1), {0.6990, 0.3620, 0.7150}, 0.5);
}

ModelSpec build_attractor_fail() {
    Matrix p0 = renormalized({{0.0223, 0.1023, 0.8754},
                              {0.0343, 0.1718, 0.7940},
                              {0.5232, 0.4552, 0.0215}});
    Matrix p1 = renormalized({{0.1487, 0.3044, 0.5469},
                              {0.5685, 0.4112, 0.0204},
                              {0.2527, 0.2731, 0.4742}});
    return bandit_instance("attractor_fail", std::move(p0), std::move(p1), {0.3740, 0.1174, 0.0787}, 0.4);
}

ModelSpec build_two_state_toy() {
    Matrix eye(2, 2);
    eye(0, 0) = eye(1, 1) = 1.0;
    ModelSpec spec = bandit_instance("two_state_toy", eye, eye, {0.0, 1.0}, 0.5);
    return spec;
}

}  // namespace

std::optional<Example> example_from_name(const std::string& name) {
    if (name == "taxi") return Example::Taxi;
    if (name == "nonindexable") return Example::Nonindexable;
    if (name == "attractor_fail") return Example::AttractorFail;
    if (name == "two_state_toy") return Example::TwoStateToy;
    return std::nullopt;
}

std::string example_name(Example which) {
    switch (which) {
        case Example::Taxi: return "taxi";
        case Example::Nonindexable: return "nonindexable";
        case Example::AttractorFail: return "attractor_fail";
        case Example::TwoStateToy: return "two_state_toy";
    }
    return "?";
}

std::vector<std::string> example_names() { return {"taxi", "nonindexable", "attractor_fail", "two_state_toy"}; }

ModelSpec build_example(Example which) {
    switch (which) {
        case Example::Taxi: return build_taxi();
        case Example::Nonindexable: return build_nonindexable();
        case Example::AttractorFail: return build_attractor_fail();
        case Example::TwoStateToy: return build_two_state_toy();
    }
    throw std::logic_error("unknown example");
}

}  // namespace wcmdp
