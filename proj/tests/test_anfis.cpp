#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aufuzz/anfis.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace aufuzz::anfis;
using Eigen::VectorXd;

namespace {

TsModel random_model(std::mt19937_64& rng, const std::vector<int>& partitions) {
    std::vector<std::pair<double, double>> ranges(partitions.size(), {-1.0, 1.0});
    TsModel model = init_grid_model(partitions, ranges);
    for (auto& per_input : model.mfs) {
        for (auto& mf : per_input) {
            mf.center += 0.3 * oracles::gaussian(rng);
            mf.sigma *= 0.7 + 0.6 * oracles::unit_uniform(rng);
        }
    }
    for (auto& rule : model.rules)
        for (Eigen::Index i = 0; i < rule.coeff.size(); ++i)
            rule.coeff[i] = 0.5 * oracles::gaussian(rng);
    return model;
}

std::vector<LabeledVector> make_samples(std::mt19937_64& rng, int k, int count) {
    std::vector<LabeledVector> data;
    for (int i = 0; i < count; ++i) {
        LabeledVector s;
        s.x = VectorXd(k);
        for (int j = 0; j < k; ++j) s.x[j] = 2.0 * oracles::unit_uniform(rng) - 1.0;
        s.target = oracles::unit_uniform(rng);
        data.push_back(std::move(s));
    }
    return data;
}

// Direct transcription of the weighted-average inference formulas, kept as a
// plain scalar loop.
double infer_oracle(const TsModel& m, const VectorXd& x) {
    double num = 0.0, den = 0.0;
    for (const TsRule& rule : m.rules) {
        double w = 1.0;
        for (int j = 0; j < m.k; ++j) {
            const GaussianMf& mf = m.mfs[j][rule.mf_index[j]];
            w *= std::exp(-(x[j] - mf.center) * (x[j] - mf.center) / (2.0 * mf.sigma * mf.sigma));
        }
        double y_i = rule.coeff[0];
        for (int j = 0; j < m.k; ++j) y_i += rule.coeff[j + 1] * x[j];
        num += w * y_i;
        den += w;
    }
    return num / den;
}

double mse_oracle(const TsModel& m, const std::vector<LabeledVector>& data) {
    double acc = 0.0;
    for (const auto& s : data) {
        const double e = infer_oracle(m, s.x) - s.target;
        acc += e * e;
    }
    return acc / static_cast<double>(data.size());
}

} // namespace

TEST_CASE("rule_firing: peak at the centers") {
    std::mt19937_64 rng(3);
    const TsModel m = random_model(rng, {2, 3});
    const TsRule& rule = m.rules[4];
    VectorXd x(2);
    x << m.mfs[0][rule.mf_index[0]].center, m.mfs[1][rule.mf_index[1]].center;
    CHECK(rule_firing(m, rule, x) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("rule_firing: half-width identity") {
    std::mt19937_64 rng(5);
    const TsModel m = random_model(rng, {2, 2});
    const TsRule& rule = m.rules[1];
    const double halfwidth = std::sqrt(2.0 * std::log(2.0));
    for (int j = 0; j < 2; ++j) {
        VectorXd x(2);
        x << m.mfs[0][rule.mf_index[0]].center, m.mfs[1][rule.mf_index[1]].center;
        x[j] += m.mfs[j][rule.mf_index[j]].sigma * halfwidth;
        CHECK(rule_firing(m, rule, x) == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("rule_firing: two offsets evaluate to the exact product") {
    std::vector<std::pair<double, double>> ranges(2, {-1.0, 1.0});
    TsModel m = init_grid_model({1, 1}, ranges);
    const TsRule& rule = m.rules[0];
    VectorXd x(2);
    x << m.mfs[0][0].center + m.mfs[0][0].sigma, m.mfs[1][0].center + 2.0 * m.mfs[1][0].sigma;
    CHECK(rule_firing(m, rule, x) ==
          doctest::Approx(std::exp(-0.5) * std::exp(-2.0)).epsilon(1e-13));
}

TEST_CASE("infer: single-rule output is the bare linear consequent") {
    std::mt19937_64 rng(7);
    TsModel m = random_model(rng, {1, 1, 1});
    VectorXd x(3);
    x << 0.3, -0.8, 0.1;
    const double expect = m.rules[0].coeff[0] + m.rules[0].coeff.tail(3).dot(x);
    CHECK(infer(m, x).y == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("infer: equal firing averages the consequents") {
    std::vector<std::pair<double, double>> ranges{{-1.0, 1.0}};
    TsModel m = init_grid_model({2}, ranges);
    m.rules[0].coeff << 0.7, 0.0;
    m.rules[1].coeff << -0.2, 0.0;
    VectorXd x(1);
    x << 0.5 * (m.mfs[0][0].center + m.mfs[0][1].center);  // equidistant from both centers
    CHECK(infer(m, x).y == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("infer: matches the direct formula oracle") {
    std::mt19937_64 rng(11);
    const TsModel m = random_model(rng, {2, 2});
    for (int trial = 0; trial < 20; ++trial) {
        VectorXd x(2);
        x << 2.0 * oracles::unit_uniform(rng) - 1.0, 2.0 * oracles::unit_uniform(rng) - 1.0;
        CHECK(infer(m, x).y == doctest::Approx(infer_oracle(m, x)).epsilon(1e-12));
    }
}

TEST_CASE("infer: output is a convex combination of rule outputs") {
    std::mt19937_64 rng(13);
    const TsModel m = random_model(rng, {3, 2});
    for (int trial = 0; trial < 50; ++trial) {
        VectorXd x(2);
        x << 3.0 * oracles::gaussian(rng), 3.0 * oracles::gaussian(rng);
        const Inference inf = infer(m, x);
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& [w, y] : inf.per_rule) {
            lo = std::min(lo, y);
            hi = std::max(hi, y);
        }
        CHECK(inf.y >= lo - 1e-10);
        CHECK(inf.y <= hi + 1e-10);
    }
}

TEST_CASE("infer: continuous in the input") {
    std::mt19937_64 rng(17);
    const TsModel m = random_model(rng, {2, 3});
    for (int trial = 0; trial < 20; ++trial) {
        VectorXd x(2);
        x << oracles::gaussian(rng), oracles::gaussian(rng);
        VectorXd x2 = x;
        x2[trial % 2] += 1e-9;
        CHECK(std::abs(infer(m, x).y - infer(m, x2).y) <= 1e-6 * (1.0 + std::abs(infer(m, x).y)));
    }
}

TEST_CASE("infer: rule order permutation leaves the output unchanged") {
    std::mt19937_64 rng(19);
    TsModel m = random_model(rng, {2, 2});
    TsModel shuffled = m;
    std::swap(shuffled.rules[0], shuffled.rules[3]);
    std::swap(shuffled.rules[1], shuffled.rules[2]);
    for (int trial = 0; trial < 20; ++trial) {
        VectorXd x(2);
        x << oracles::gaussian(rng), oracles::gaussian(rng);
        CHECK(std::abs(infer(m, x).y - infer(shuffled, x).y) <=
              1e-12 * (1.0 + std::abs(infer(m, x).y)));
    }
}

TEST_CASE("mse: exact cases and the scalar-loop oracle") {
    std::mt19937_64 rng(23);
    TsModel m = random_model(rng, {2});

    std::vector<LabeledVector> perfect;
    for (int i = 0; i < 5; ++i) {
        LabeledVector s;
        s.x = VectorXd::Constant(1, -0.9 + 0.4 * i);
        s.target = infer(m, s.x).y;
        perfect.push_back(s);
    }
    CHECK(mse(m, perfect) == doctest::Approx(0.0).epsilon(1e-15));

    TsModel constant = init_grid_model({1}, {{0.0, 1.0}});
    constant.rules[0].coeff << 0.8, 0.0;
    std::vector<LabeledVector> one{{VectorXd::Constant(1, 0.5), 0.3}};
    CHECK(mse(constant, one) == doctest::Approx(0.25).epsilon(1e-14));

    const auto data = make_samples(rng, 1, 10);
    CHECK(mse(m, data) == doctest::Approx(mse_oracle(m, data)).epsilon(1e-12));
    CHECK_THROWS_AS(mse(m, {}), std::invalid_argument);
}

TEST_CASE("lse_consequents: recovers the generating consequents") {
    std::mt19937_64 rng(29);
    const TsModel truth = random_model(rng, {2, 2});
    std::vector<LabeledVector> data;
    for (int i = 0; i < 80; ++i) {
        LabeledVector s;
        s.x = VectorXd(2);
        s.x << 2.0 * oracles::unit_uniform(rng) - 1.0, 2.0 * oracles::unit_uniform(rng) - 1.0;
        s.target = infer(truth, s.x).y;
        data.push_back(std::move(s));
    }
    TsModel blank = truth;
    for (auto& rule : blank.rules) rule.coeff.setZero();
    const TsModel fitted = lse_consequents(blank, data, 1e-12);
    CHECK(mse(fitted, data) <= 1e-12);
}

TEST_CASE("lse_consequents: single rule reduces to ridge regression") {
    std::mt19937_64 rng(31);
    TsModel m = init_grid_model({1}, {{-1.0, 1.0}});
    const auto data = make_samples(rng, 1, 40);
    const double ridge = 1e-8;
    const TsModel fitted = lse_consequents(m, data, ridge);

    // closed-form 2x2 ridge system on the (1, x) design
    double s00 = 0.0, s01 = 0.0, s11 = 0.0, b0 = 0.0, b1 = 0.0;
    for (const auto& s : data) {
        s00 += 1.0;
        s01 += s.x[0];
        s11 += s.x[0] * s.x[0];
        b0 += s.target;
        b1 += s.x[0] * s.target;
    }
    s00 += ridge;
    s11 += ridge;
    const double det = s00 * s11 - s01 * s01;
    const double p0 = (s11 * b0 - s01 * b1) / det;
    const double p1 = (s00 * b1 - s01 * b0) / det;
    CHECK(fitted.rules[0].coeff[0] == doctest::Approx(p0).epsilon(1e-9));
    CHECK(fitted.rules[0].coeff[1] == doctest::Approx(p1).epsilon(1e-9));
}

TEST_CASE("lse_consequents: local optimality under random perturbations") {
    std::mt19937_64 rng(37);
    TsModel m = random_model(rng, {2, 2});
    const auto data = make_samples(rng, 2, 60);
    const TsModel fitted = lse_consequents(m, data, 1e-8);
    const double best = mse(fitted, data);
    CHECK(best <= mse(m, data));  // never worse than the input consequents
    for (int trial = 0; trial < 100; ++trial) {
        TsModel probe = fitted;
        for (auto& rule : probe.rules)
            for (Eigen::Index i = 0; i < rule.coeff.size(); ++i)
                rule.coeff[i] += 1e-3 * oracles::gaussian(rng);
        CHECK(mse(probe, data) >= best - 1e-12);
    }
}

TEST_CASE("premise_gradient: zero at a perfectly fit model") {
    std::mt19937_64 rng(41);
    const TsModel m = random_model(rng, {2, 2});
    std::vector<LabeledVector> data;
    for (int i = 0; i < 30; ++i) {
        LabeledVector s;
        s.x = VectorXd(2);
        s.x << oracles::gaussian(rng), oracles::gaussian(rng);
        s.target = infer(m, s.x).y;
        data.push_back(std::move(s));
    }
    const PremiseGradient g = premise_gradient(m, data);
    for (const auto& v : g.d_center)
        for (double x : v) CHECK(x == 0.0);
    for (const auto& v : g.d_sigma)
        for (double x : v) CHECK(x == 0.0);
}

TEST_CASE("premise_gradient: matches central finite differences") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 5; ++trial) {
        const std::vector<int> partitions =
            trial % 2 ? std::vector<int>{3, 2} : std::vector<int>{2, 2};
        TsModel m = random_model(rng, partitions);
        const auto data = make_samples(rng, 2, 40);
        const PremiseGradient g = premise_gradient(m, data);
        for (std::size_t j = 0; j < m.mfs.size(); ++j) {
            for (std::size_t p = 0; p < m.mfs[j].size(); ++p) {
                const auto fd = [&](double GaussianMf::*field) {
                    const double h = 1e-6 * std::max(1.0, std::abs(m.mfs[j][p].*field));
                    TsModel hi = m, lo = m;
                    hi.mfs[j][p].*field += h;
                    lo.mfs[j][p].*field -= h;
                    return (mse(hi, data) - mse(lo, data)) / (2.0 * h);
                };
                const double fdc = fd(&GaussianMf::center);
                const double fds = fd(&GaussianMf::sigma);
                CHECK(std::abs(g.d_center[j][p] - fdc) <=
                      1e-4 * std::max({std::abs(fdc), std::abs(g.d_center[j][p]), 1e-8}));
                CHECK(std::abs(g.d_sigma[j][p] - fds) <=
                      1e-4 * std::max({std::abs(fds), std::abs(g.d_sigma[j][p]), 1e-8}));
            }
        }
    }
}

TEST_CASE("premise_gradient: duplicated data leaves the mean gradient unchanged") {
    std::mt19937_64 rng(47);
    const TsModel m = random_model(rng, {2, 2});
    const auto data = make_samples(rng, 2, 25);
    std::vector<LabeledVector> doubled = data;
    doubled.insert(doubled.end(), data.begin(), data.end());
    const PremiseGradient a = premise_gradient(m, data);
    const PremiseGradient b = premise_gradient(m, doubled);
    for (std::size_t j = 0; j < a.d_center.size(); ++j)
        for (std::size_t p = 0; p < a.d_center[j].size(); ++p) {
            CHECK(a.d_center[j][p] == doctest::Approx(b.d_center[j][p]).epsilon(1e-12));
            CHECK(a.d_sigma[j][p] == doctest::Approx(b.d_sigma[j][p]).epsilon(1e-12));
        }
}

TEST_CASE("hybrid_epoch: self-generated data is a fixed point") {
    std::mt19937_64 rng(53);
    const TsModel m = random_model(rng, {2, 2});
    std::vector<LabeledVector> data;
    for (int i = 0; i < 60; ++i) {
        LabeledVector s;
        s.x = VectorXd(2);
        s.x << 2.0 * oracles::unit_uniform(rng) - 1.0, 2.0 * oracles::unit_uniform(rng) - 1.0;
        s.target = infer(m, s.x).y;
        data.push_back(std::move(s));
    }
    const EpochResult res = hybrid_epoch(m, data, 0.01);
    CHECK(res.train_mse <= 1e-18);
    for (std::size_t j = 0; j < m.mfs.size(); ++j)
        for (std::size_t p = 0; p < m.mfs[j].size(); ++p) {
            CHECK(std::abs(res.model.mfs[j][p].center - m.mfs[j][p].center) <= 1e-9);
            CHECK(std::abs(res.model.mfs[j][p].sigma - m.mfs[j][p].sigma) <= 1e-9);
        }
    for (std::size_t r = 0; r < m.rules.size(); ++r)
        CHECK((res.model.rules[r].coeff - m.rules[r].coeff).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("hybrid_epoch: training improves over many epochs") {
    std::mt19937_64 rng(59);
    std::vector<LabeledVector> data;
    for (int i = 0; i < 120; ++i) {
        LabeledVector s;
        s.x = VectorXd::Constant(1, 2.0 * oracles::unit_uniform(rng) - 1.0);
        s.target = 0.5 + 0.5 * std::sin(2.5 * s.x[0]) * std::cos(1.3 * s.x[0]);
        data.push_back(std::move(s));
    }
    TsModel m = init_grid_model({3}, observed_ranges(data));
    const double mse1 = hybrid_epoch(m, data, 0.01).train_mse;
    TsModel cur = m;
    double mse50 = 0.0;
    for (int e = 0; e < 50; ++e) {
        const EpochResult res = hybrid_epoch(cur, data, 0.01);
        cur = res.model;
        mse50 = res.train_mse;
    }
    CHECK(mse50 < mse1);
}

TEST_CASE("hybrid_epoch: zero learning rate is a pure LSE pass") {
    std::mt19937_64 rng(61);
    TsModel m = random_model(rng, {2, 2});
    const auto data = make_samples(rng, 2, 50);
    const EpochResult res = hybrid_epoch(m, data, 0.0);
    for (std::size_t j = 0; j < m.mfs.size(); ++j)
        for (std::size_t p = 0; p < m.mfs[j].size(); ++p) {
            CHECK(res.model.mfs[j][p].center == m.mfs[j][p].center);
            CHECK(res.model.mfs[j][p].sigma == m.mfs[j][p].sigma);
        }
    const TsModel lse = lse_consequents(m, data, 1e-8);
    CHECK(res.train_mse == doctest::Approx(mse(lse, data)).epsilon(1e-14));
}

TEST_CASE("init_grid_model: grid layout and membership initialization") {
    const TsModel m = init_grid_model({2, 3}, {{0.0, 2.0}, {-1.0, 1.0}});
    CHECK(m.rule_count() == 6);
    // centers evenly spaced at a + (b-a)(i - 1/2)/d
    CHECK(m.mfs[0][0].center == doctest::Approx(0.5));
    CHECK(m.mfs[0][1].center == doctest::Approx(1.5));
    CHECK(m.mfs[1][1].center == doctest::Approx(0.0));
    CHECK(m.mfs[0][0].sigma == doctest::Approx(2.0 / 4.0 * 1.2));
    // lexicographic rule order, input 0 most significant
    CHECK(m.rules[0].mf_index == std::vector<int>{0, 0});
    CHECK(m.rules[2].mf_index == std::vector<int>{0, 2});
    CHECK(m.rules[3].mf_index == std::vector<int>{1, 0});
}
