#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aufuzz/structure.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace aufuzz;
using namespace aufuzz::structure;
using anfis::LabeledVector;
using Eigen::VectorXd;

namespace {

std::vector<LabeledVector> linear_data(std::mt19937_64& rng, int count, double noise) {
    std::vector<LabeledVector> data;
    for (int i = 0; i < count; ++i) {
        LabeledVector s;
        s.x = VectorXd(2);
        s.x << 2.0 * oracles::unit_uniform(rng) - 1.0, 2.0 * oracles::unit_uniform(rng) - 1.0;
        s.target = 0.5 + 0.2 * s.x[0] + 0.1 * s.x[1] + noise * oracles::gaussian(rng);
        data.push_back(std::move(s));
    }
    return data;
}

std::vector<LabeledVector> step_data(std::mt19937_64& rng, int count, bool duplicate_input = false) {
    std::vector<LabeledVector> data;
    for (int i = 0; i < count; ++i) {
        LabeledVector s;
        s.x = VectorXd(2);
        s.x[0] = 2.0 * oracles::unit_uniform(rng) - 1.0;
        s.x[1] = duplicate_input ? s.x[0] : 2.0 * oracles::unit_uniform(rng) - 1.0;
        s.target = s.x[0] > 0.0 ? 0.9 : 0.1;
        data.push_back(std::move(s));
    }
    return data;
}

} // namespace

TEST_CASE("spawn_candidates: one per input, partitions incremented") {
    StructureState state;
    state.partition_counts = {1};
    StructureConfig cfg;
    auto one = spawn_candidates(state, {{0.0, 1.0}}, cfg);
    CHECK(one.size() == 1);
    CHECK(one[0].partition_counts == std::vector<int>{2});

    state.partition_counts = {1, 1, 1};
    auto three = spawn_candidates(state, {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}}, cfg);
    REQUIRE(three.size() == 3);
    CHECK(three[0].partition_counts == std::vector<int>{2, 1, 1});
    CHECK(three[1].partition_counts == std::vector<int>{1, 2, 1});
    CHECK(three[2].partition_counts == std::vector<int>{1, 1, 2});
}

TEST_CASE("spawn_candidates: grid products follow the incremented counts") {
    StructureState state;
    state.partition_counts = {2, 3};
    StructureConfig cfg;
    auto cands = spawn_candidates(state, {{0.0, 1.0}, {0.0, 1.0}}, cfg);
    REQUIRE(cands.size() == 2);
    CHECK(cands[0].rule_count() == 9);
    CHECK(cands[1].rule_count() == 8);
}

TEST_CASE("spawn_candidates: candidates over the rule cap come back empty") {
    StructureState state;
    state.partition_counts = {8, 8};
    StructureConfig cfg;
    cfg.rule_cap = 64;
    auto cands = spawn_candidates(state, {{0.0, 1.0}, {0.0, 1.0}}, cfg);
    CHECK(cands[0].rules.empty());
    CHECK(cands[1].rules.empty());
}

TEST_CASE("identify_structure: linear targets stop at a small grid") {
    std::mt19937_64 rng(7);
    // noisy training, clean validation: extra rules only ever hurt val MSE
    const auto train = linear_data(rng, 200, 0.02);
    const auto val = linear_data(rng, 60, 0.0);
    const StructureResult res = identify_structure(train, val, StructureConfig{});

    int sum = 0;
    for (int d : res.model.partition_counts) sum += d;
    CHECK(sum <= 4);  // k + 2 for k = 2
    CHECK(anfis::mse(res.model, val) < 5e-4);

    // the first iteration always accepts (V starts at infinity)
    bool first_accepted = false;
    for (const auto& rec : res.history)
        if (rec.iteration == 1 && rec.accepted) first_accepted = true;
    CHECK(first_accepted);
}

TEST_CASE("identify_structure: splits the relevant input, leaves noise alone") {
    int wins = 0;
    for (int seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(100 + seed);
        const auto train = step_data(rng, 200);
        const auto val = step_data(rng, 60);
        const StructureResult res = identify_structure(train, val, StructureConfig{});
        const auto& d = res.model.partition_counts;
        if (d[0] > d[1] && d[1] == 1) ++wins;

        // accepted validation MSE strictly decreasing
        double prev = std::numeric_limits<double>::infinity();
        for (const auto& rec : res.history) {
            if (!rec.accepted) continue;
            CHECK(rec.val_mse < prev);
            prev = rec.val_mse;
        }
    }
    CHECK(wins >= 9);
}

TEST_CASE("identify_structure: deterministic history across repeated runs") {
    std::mt19937_64 rng(31);
    const auto train = step_data(rng, 150);
    const auto val = step_data(rng, 50);
    const StructureResult a = identify_structure(train, val, StructureConfig{});
    const StructureResult b = identify_structure(train, val, StructureConfig{});
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].train_mse == b.history[i].train_mse);
        CHECK(a.history[i].val_mse == b.history[i].val_mse);
        CHECK(a.history[i].accepted == b.history[i].accepted);
    }
}

TEST_CASE("identify_structure: exact ties go to the lower input index") {
    std::mt19937_64 rng(37);
    const auto train = step_data(rng, 150, /*duplicate_input=*/true);
    const auto val = step_data(rng, 50, /*duplicate_input=*/true);
    const StructureResult res = identify_structure(train, val, StructureConfig{});
    // duplicated inputs make iteration 1 a bitwise tie; input 0 must win it
    REQUIRE(res.history.size() >= 2);
    CHECK(res.history[0].input == 0);
    CHECK(res.history[1].input == 1);
    CHECK(res.history[0].train_mse == res.history[1].train_mse);
    bool accepted_first = false;
    for (const auto& rec : res.history)
        if (rec.iteration == 1 && rec.accepted) {
            CHECK(rec.input == 0);
            accepted_first = true;
        }
    CHECK(accepted_first);
}

TEST_CASE("identify_structure: returns a validation-accepted model") {
    std::mt19937_64 rng(41);
    const auto train = step_data(rng, 150);
    const auto val = step_data(rng, 50);
    const StructureResult res = identify_structure(train, val, StructureConfig{});
    std::vector<int> accepted_counts;
    std::vector<int> base(2, 1);
    for (const auto& rec : res.history) {
        if (rec.accepted) {
            base[static_cast<std::size_t>(rec.input)] += 1;
        }
    }
    CHECK(res.model.partition_counts == base);
}

TEST_CASE("identify_structure: unreachable rule cap falls back to the base model") {
    std::mt19937_64 rng(43);
    const auto train = step_data(rng, 80);
    const auto val = step_data(rng, 30);
    StructureConfig cfg;
    cfg.rule_cap = 1;  // even the first growth exceeds it
    const StructureResult res = identify_structure(train, val, cfg);
    CHECK(res.model.partition_counts == std::vector<int>{1, 1});
    for (const auto& rec : res.history) CHECK(rec.skipped);
}

TEST_CASE("final_polish: zero epochs is the identity") {
    std::mt19937_64 rng(47);
    const auto train = step_data(rng, 100);
    const auto val = step_data(rng, 40);
    const StructureResult res = identify_structure(train, val, StructureConfig{});
    const anfis::TsModel polished = final_polish(res.model, train, 0);
    for (std::size_t r = 0; r < polished.rules.size(); ++r)
        CHECK((polished.rules[r].coeff - res.model.rules[r].coeff).norm() == 0.0);
}

TEST_CASE("final_polish: long polishing never ends above the selection MSE") {
    std::mt19937_64 rng(53);
    const auto train = step_data(rng, 150);
    const auto val = step_data(rng, 50);
    const StructureResult res = identify_structure(train, val, StructureConfig{});
    const double at_selection = anfis::mse(res.model, train);
    const anfis::TsModel polished = final_polish(res.model, train, 200);
    CHECK(anfis::mse(polished, train) <= at_selection + 1e-12);
}

TEST_CASE("final_polish: a perfectly fit model stays put") {
    std::mt19937_64 rng(59);
    std::vector<LabeledVector> data;
    anfis::TsModel truth = anfis::init_grid_model({2, 2}, {{-1.0, 1.0}, {-1.0, 1.0}});
    for (auto& rule : truth.rules)
        for (Eigen::Index i = 0; i < rule.coeff.size(); ++i)
            rule.coeff[i] = 0.3 * oracles::gaussian(rng);
    for (int i = 0; i < 60; ++i) {
        LabeledVector s;
        s.x = VectorXd(2);
        s.x << 2.0 * oracles::unit_uniform(rng) - 1.0, 2.0 * oracles::unit_uniform(rng) - 1.0;
        s.target = anfis::infer(truth, s.x).y;
        data.push_back(std::move(s));
    }
    const anfis::TsModel polished = final_polish(truth, data, 50);
    for (std::size_t r = 0; r < truth.rules.size(); ++r)
        CHECK((polished.rules[r].coeff - truth.rules[r].coeff).cwiseAbs().maxCoeff() <= 1e-9);
    for (std::size_t j = 0; j < truth.mfs.size(); ++j)
        for (std::size_t p = 0; p < truth.mfs[j].size(); ++p)
            CHECK(std::abs(polished.mfs[j][p].center - truth.mfs[j][p].center) <= 1e-9);
}

TEST_CASE("history_log: one line per candidate with the accepted flag") {
    std::mt19937_64 rng(61);
    const auto train = step_data(rng, 100);
    const auto val = step_data(rng, 40);
    const StructureResult res = identify_structure(train, val, StructureConfig{});
    const std::string log = history_log(res.history);
    std::size_t lines = 0;
    for (char c : log)
        if (c == '\n') ++lines;
    CHECK(lines == res.history.size() + 1);  // header plus one per candidate
    CHECK(log.find("yes") != std::string::npos);
}
