#include "aufuzz/anfis.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace aufuzz::anfis {

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double log_membership(const GaussianMf& mf, double x) {
    const double d = (x - mf.center) / mf.sigma;
    return -0.5 * d * d;
}

struct SampleEval {
    std::vector<double> w;   // rescaled so max == 1
    std::vector<double> y_i;
    double sum_w = 0.0;
    double y = 0.0;
};

SampleEval eval_sample(const TsModel& model, const Eigen::VectorXd& x) {
    const int n = model.rule_count();
    SampleEval ev;
    ev.w.resize(n);
    ev.y_i.resize(n);
    double max_log = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        double lw = 0.0;
        for (int j = 0; j < model.k; ++j)
            lw += log_membership(model.mfs[j][model.rules[i].mf_index[j]], x[j]);
        ev.w[i] = lw;  // stash log weight
        if (lw > max_log) max_log = lw;
    }
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        ev.w[i] = std::exp(ev.w[i] - max_log);
        const Eigen::VectorXd& p = model.rules[i].coeff;
        ev.y_i[i] = p[0] + p.tail(model.k).dot(x);
        ev.sum_w += ev.w[i];
        acc += ev.w[i] * ev.y_i[i];
    }
    ev.y = acc / ev.sum_w;
    return ev;
}

} // namespace

double TsModel::sigma_floor(int input) const {
    const double range = input_ranges[input].second - input_ranges[input].first;
    return std::max(1e-6 * range, 1e-12);
}

TsModel init_grid_model(const std::vector<int>& partition_counts,
                        const std::vector<std::pair<double, double>>& input_ranges,
                        double jitter, unsigned long long seed) {
    if (partition_counts.empty() || partition_counts.size() != input_ranges.size())
        throw std::invalid_argument("init_grid_model: partition/range size mismatch");

    TsModel model;
    model.k = static_cast<int>(partition_counts.size());
    model.partition_counts = partition_counts;
    model.input_ranges = input_ranges;

    std::mt19937_64 rng(seed);
    long long n_rules = 1;
    for (int j = 0; j < model.k; ++j) {
        const int d = partition_counts[j];
        if (d < 1) throw std::invalid_argument("init_grid_model: partition count < 1");
        n_rules *= d;
        const double a = input_ranges[j].first;
        const double width = std::max(input_ranges[j].second - a, 1e-9);
        std::vector<GaussianMf> mfs(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) {
            mfs[i].center = a + width * (i + 0.5) / d;
            mfs[i].sigma = width / (2.0 * d) * 1.2;  // 20% overlap
            if (jitter > 0.0)
                mfs[i].center += (2.0 * uniform01(rng) - 1.0) * jitter * mfs[i].sigma;
        }
        model.mfs.push_back(std::move(mfs));
    }

    model.rules.resize(static_cast<std::size_t>(n_rules));
    std::vector<int> digits(static_cast<std::size_t>(model.k), 0);
    for (auto& rule : model.rules) {
        rule.mf_index = digits;
        rule.coeff = Eigen::VectorXd::Zero(model.k + 1);
        for (int j = model.k - 1; j >= 0; --j) {  // input 0 most significant
            if (++digits[j] < partition_counts[j]) break;
            digits[j] = 0;
        }
    }
    return model;
}

std::vector<std::pair<double, double>> observed_ranges(const std::vector<LabeledVector>& data) {
    if (data.empty()) throw std::invalid_argument("observed_ranges: empty data");
    const Eigen::Index k = data[0].x.size();
    std::vector<std::pair<double, double>> ranges(static_cast<std::size_t>(k));
    for (Eigen::Index j = 0; j < k; ++j)
        ranges[j] = {data[0].x[j], data[0].x[j]};
    for (const auto& s : data) {
        for (Eigen::Index j = 0; j < k; ++j) {
            ranges[j].first = std::min(ranges[j].first, s.x[j]);
            ranges[j].second = std::max(ranges[j].second, s.x[j]);
        }
    }
    return ranges;
}

double rule_firing(const TsModel& model, const TsRule& rule, const Eigen::VectorXd& x) {
    if (x.size() != model.k) throw std::invalid_argument("rule_firing: dimension mismatch");
    double w = 1.0;
    for (int j = 0; j < model.k; ++j)
        w *= std::exp(log_membership(model.mfs[j][rule.mf_index[j]], x[j]));
    return w;
}

Inference infer(const TsModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.k) throw std::invalid_argument("infer: dimension mismatch");
    const SampleEval ev = eval_sample(model, x);
    Inference out;
    out.y = ev.y;
    out.per_rule.reserve(ev.w.size());
    for (std::size_t i = 0; i < ev.w.size(); ++i) out.per_rule.emplace_back(ev.w[i], ev.y_i[i]);
    return out;
}

double mse(const TsModel& model, const std::vector<LabeledVector>& data) {
    if (data.empty()) throw std::invalid_argument("mse: empty data");
    double acc = 0.0;
    for (const auto& s : data) {
        const double e = eval_sample(model, s.x).y - s.target;
        acc += e * e;
    }
    return acc / static_cast<double>(data.size());
}

TsModel lse_consequents(const TsModel& model, const std::vector<LabeledVector>& data, double ridge) {
    if (data.empty()) throw std::invalid_argument("lse_consequents: empty data");
    const int n = model.rule_count();
    const int stride = model.k + 1;
    const Eigen::Index dim = static_cast<Eigen::Index>(n) * stride;

    Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd atb = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd row(dim);
    for (const auto& s : data) {
        const SampleEval ev = eval_sample(model, s.x);
        for (int i = 0; i < n; ++i) {
            const double wn = ev.w[i] / ev.sum_w;
            row[static_cast<Eigen::Index>(i) * stride] = wn;
            for (int j = 0; j < model.k; ++j)
                row[static_cast<Eigen::Index>(i) * stride + 1 + j] = wn * s.x[j];
        }
        ata.selfadjointView<Eigen::Lower>().rankUpdate(row);
        atb += row * s.target;
    }
    ata = ata.selfadjointView<Eigen::Lower>();
    ata.diagonal().array() += ridge;

    const Eigen::VectorXd sol = ata.ldlt().solve(atb);
    TsModel out = model;
    for (int i = 0; i < n; ++i)
        out.rules[i].coeff = sol.segment(static_cast<Eigen::Index>(i) * stride, stride);

    // The ridge shifts the optimum slightly; never hand back a worse model.
    if (mse(out, data) > mse(model, data)) return model;
    return out;
}

PremiseGradient premise_gradient(const TsModel& model, const std::vector<LabeledVector>& data) {
    if (data.empty()) throw std::invalid_argument("premise_gradient: empty data");
    PremiseGradient grad;
    grad.d_center.resize(model.mfs.size());
    grad.d_sigma.resize(model.mfs.size());
    for (std::size_t j = 0; j < model.mfs.size(); ++j) {
        grad.d_center[j].assign(model.mfs[j].size(), 0.0);
        grad.d_sigma[j].assign(model.mfs[j].size(), 0.0);
    }

    const int n = model.rule_count();
    for (const auto& s : data) {
        const SampleEval ev = eval_sample(model, s.x);
        const double err = ev.y - s.target;
        for (int i = 0; i < n; ++i) {
            // dE_sample/d log w_i = 2 err (y_i - y) w_i / sum_w
            const double d_logw = 2.0 * err * (ev.y_i[i] - ev.y) * ev.w[i] / ev.sum_w;
            if (d_logw == 0.0) continue;
            for (int j = 0; j < model.k; ++j) {
                const int m = model.rules[i].mf_index[j];
                const GaussianMf& mf = model.mfs[j][m];
                const double z = (s.x[j] - mf.center) / mf.sigma;
                grad.d_center[j][m] += d_logw * z / mf.sigma;
                grad.d_sigma[j][m] += d_logw * z * z / mf.sigma;
            }
        }
    }
    const double inv_p = 1.0 / static_cast<double>(data.size());
    for (auto& v : grad.d_center)
        for (double& g : v) g *= inv_p;
    for (auto& v : grad.d_sigma)
        for (double& g : v) g *= inv_p;
    return grad;
}

EpochResult hybrid_epoch(const TsModel& model, const std::vector<LabeledVector>& data, double lr,
                         double lse_ridge) {
    if (lr < 0.0) throw std::invalid_argument("hybrid_epoch: negative learning rate");
    TsModel out = lse_consequents(model, data, lse_ridge);
    if (lr > 0.0) {
        const PremiseGradient grad = premise_gradient(out, data);
        for (std::size_t j = 0; j < out.mfs.size(); ++j) {
            const double floor = out.sigma_floor(static_cast<int>(j));
            for (std::size_t m = 0; m < out.mfs[j].size(); ++m) {
                out.mfs[j][m].center -= lr * grad.d_center[j][m];
                out.mfs[j][m].sigma -= lr * grad.d_sigma[j][m];
                if (out.mfs[j][m].sigma < floor) out.mfs[j][m].sigma = floor;
            }
        }
    }
    return {out, mse(out, data)};
}

} // namespace aufuzz::anfis
