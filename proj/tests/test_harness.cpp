#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "test_util.hpp"
#include "wcmdp/harness.hpp"

using namespace wcmdp;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig small_bandit_config(const std::string& out_dir) {
    ExperimentConfig cfg;
    cfg.model_name = "nonindexable";
    cfg.policies = {PolicyChoice{PolicyKind::FluidDiscrete, "auto", {}, "", nullptr},
                    PolicyChoice{PolicyKind::LpPriority, "", {}, "", nullptr},
                    PolicyChoice{PolicyKind::Id, "", {}, "", nullptr}};
    cfg.n_list = {20, 50};
    cfg.horizon = 300;
    cfg.burn_in = 60;
    cfg.replications = 3;
    cfg.seed = 99;
    cfg.out_dir = out_dir;
    return cfg;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("sweep runs all cells and persists consistent outputs") {
    TempDir dir("wcmdp_sweep_test");
    const ExperimentConfig cfg = small_bandit_config(dir.path.string());
    const SweepResult result = run_sweep(cfg);

    CHECK(result.chosen_pi == "mu");
    CHECK(result.cells.size() == 6);  // 3 policies x 2 sizes
    for (const auto& cell : result.cells) {
        CHECK(cell.replication_gains.size() == 3);
        CHECK(cell.gain_mean <= result.gain_bound + 3.0 * cell.gain_stderr + 1e-9);
    }

    // results.csv recomputes to the summary numbers
    const std::string csv = slurp(result.results_csv);
    CHECK(csv.rfind("model,policy,n,replication,gain\n", 0) == 0);
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);  // header
    std::map<std::pair<std::string, long long>, std::pair<double, int>> sums;
    while (std::getline(lines, line)) {
        std::stringstream row(line);
        std::string model, policy, n_str, rep, gain;
        std::getline(row, model, ',');
        std::getline(row, policy, ',');
        std::getline(row, n_str, ',');
        std::getline(row, rep, ',');
        std::getline(row, gain, ',');
        auto& slot = sums[{policy, std::stoll(n_str)}];
        slot.first += std::stod(gain);
        slot.second += 1;
    }
    for (const auto& cell : result.cells) {
        const auto& slot = sums.at({cell.policy, cell.n});
        REQUIRE(slot.second == 3);
        const double mean = slot.first / slot.second;
        CHECK(std::abs(mean - cell.gain_mean) <= 1e-12);
        CHECK(std::abs(cell.gap - (result.gain_bound - mean) / result.gain_bound) <= 1e-12);
    }
}

TEST_CASE("sweep output is byte-identical across reruns") {
    TempDir dir_a("wcmdp_sweep_a");
    TempDir dir_b("wcmdp_sweep_b");
    ExperimentConfig cfg = small_bandit_config(dir_a.path.string());
    cfg.threads = 2;
    const SweepResult a = run_sweep(cfg);
    cfg.out_dir = dir_b.path.string();
    cfg.threads = 1;  // worker count must not leak into the artifact
    const SweepResult b = run_sweep(cfg);
    CHECK(slurp(a.results_csv) == slurp(b.results_csv));
    CHECK(slurp(a.summary_json) == slurp(b.summary_json));
}

TEST_CASE("sweep config validation") {
    TempDir dir("wcmdp_sweep_invalid");
    SUBCASE("empty policy list") {
        ExperimentConfig cfg = small_bandit_config(dir.path.string());
        cfg.policies.clear();
        CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);
    }
    SUBCASE("non-increasing n list") {
        ExperimentConfig cfg = small_bandit_config(dir.path.string());
        cfg.n_list = {50, 50};
        CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);
    }
    SUBCASE("budget policies on a non-bandit model") {
        ExperimentConfig cfg = small_bandit_config(dir.path.string());
        cfg.model_name = "taxi";
        CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);
    }
    SUBCASE("unknown model name") {
        ExperimentConfig cfg = small_bandit_config(dir.path.string());
        cfg.model_name = "no_such_model";
        CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);
    }
}

TEST_CASE("structure-condition failure drops the fluid policy but not the baselines") {
    TempDir dir("wcmdp_sweep_toy");
    ExperimentConfig cfg;
    cfg.model_name = "two_state_toy";  // identity kernels: every policy is multichain
    cfg.policies = {PolicyChoice{PolicyKind::FluidDiscrete, "auto", {}, "", nullptr},
                    PolicyChoice{PolicyKind::Priority, "", {1, 0}, "", nullptr}};
    cfg.n_list = {10};
    cfg.horizon = 50;
    cfg.burn_in = 10;
    cfg.replications = 2;
    cfg.seed = 4;
    cfg.out_dir = dir.path.string();
    const SweepResult result = run_sweep(cfg);
    CHECK(result.chosen_pi == "none");
    CHECK_FALSE(result.condition_failure.empty());
    CHECK_FALSE(result.mu_report.unichain);
    CHECK_FALSE(result.nu_report.unichain);
    REQUIRE(result.cells.size() == 1);  // only the priority policy ran
    CHECK(result.cells[0].policy == "priority(1,0)");
}

TEST_CASE("experiment JSON loading") {
    TempDir dir("wcmdp_exp_json");
    const auto path = dir.path / "exp.json";
    {
        std::ofstream out(path);
        out << R"({
          "model": "nonindexable",
          "policies": [{"type": "fluid", "pi": "mu"},
                       {"type": "priority", "order": [2, 1, 0], "label": "worst-first"},
                       {"type": "lp_priority"},
                       {"type": "id"}],
          "n_list": [10, 30],
          "horizon": 200, "burn_in": 40, "replications": 2, "seed": 7,
          "out_dir": ")" << (dir.path / "out").string() << R"("
        })";
    }
    const ExperimentConfig cfg = load_experiment(path.string());
    CHECK(cfg.model_name == "nonindexable");
    REQUIRE(cfg.policies.size() == 4);
    CHECK(cfg.policies[0].kind == PolicyKind::FluidDiscrete);
    CHECK(cfg.policies[1].order == std::vector<int>{2, 1, 0});
    CHECK(cfg.policies[1].label == "worst-first");
    CHECK(cfg.n_list == std::vector<long long>{10, 30});
    CHECK(cfg.seed == 7);

    const SweepResult result = run_sweep(cfg);
    CHECK(result.cells.size() == 8);
    bool labeled = false;
    for (const auto& cell : result.cells) labeled = labeled || cell.policy == "worst-first";
    CHECK(labeled);

    SUBCASE("bad policy type is a parse error") {
        const auto bad = dir.path / "bad.json";
        std::ofstream out(bad);
        out << R"({"model":"nonindexable","policies":[{"type":"greedy"}],"n_list":[10]})";
        out.close();
        CHECK_THROWS_AS(load_experiment(bad.string()), ParseError);
    }
}

TEST_CASE("taxi sweep gaps trend toward the bound") {
    TempDir dir("wcmdp_sweep_taxi");
    ExperimentConfig cfg;
    cfg.model_name = "taxi";
    cfg.policies = {PolicyChoice{PolicyKind::FluidDiscrete, "mu", {}, "", nullptr}};
    cfg.n_list = {50, 200, 1000};
    cfg.horizon = 2000;
    cfg.burn_in = 400;
    cfg.replications = 4;
    cfg.seed = 62;
    cfg.out_dir = dir.path.string();
    cfg.threads = 2;
    const SweepResult result = run_sweep(cfg);
    REQUIRE(result.cells.size() == 3);
    // the gap shrinks as n grows and the bound is never crossed; at desk
    // scale the taxi gap is still a few percent at n in the low thousands
    for (size_t k = 0; k + 1 < result.cells.size(); ++k) {
        CHECK(result.cells[k + 1].gap < result.cells[k].gap);
    }
    for (const auto& cell : result.cells) {
        CHECK(cell.gap > 0.0);
        CHECK(cell.gain_mean <= result.gain_bound + 3.0 * cell.gain_stderr);
    }
}

TEST_CASE("reproduce presets") {
    SUBCASE("fig1 is the taxi panel with everything initially empty") {
        const ExperimentConfig cfg = reproduce_preset("fig1", "out");
        CHECK(cfg.model_name == "taxi");
        CHECK(cfg.initial_state == 0);
        REQUIRE(cfg.policies.size() == 1);
        CHECK(cfg.policies[0].kind == PolicyKind::FluidDiscrete);
        CHECK(cfg.n_list.front() == 10);
        CHECK(cfg.n_list.back() == 2000);
    }
    SUBCASE("fig2_right pits the fluid control against the priority policy") {
        const ExperimentConfig cfg = reproduce_preset("fig2_right", "out");
        CHECK(cfg.model_name == "attractor_fail");
        REQUIRE(cfg.policies.size() == 2);
        CHECK(cfg.policies[0].kind == PolicyKind::FluidDiscrete);
        CHECK(cfg.policies[1].kind == PolicyKind::LpPriority);
    }
    SUBCASE("unknown names list the valid ones") {
        try {
            reproduce_preset("fig9", "out");
            FAIL("expected an error");
        } catch (const std::invalid_argument& e) {
            const std::string what = e.what();
            CHECK(what.find("fig1") != std::string::npos);
            CHECK(what.find("fig2_left") != std::string::npos);
            CHECK(what.find("fig2_right") != std::string::npos);
        }
    }
}
