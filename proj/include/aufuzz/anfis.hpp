#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace aufuzz::anfis {

struct GaussianMf {
    double center = 0.0;
    double sigma = 1.0;
};

/// One Takagi-Sugeno rule: per-input membership indices into the model's
/// shared partitions, plus the linear consequent (p0, p1..pk).
struct TsRule {
    std::vector<int> mf_index;
    Eigen::VectorXd coeff;
};

struct LabeledVector {
    Eigen::VectorXd x;
    double target = 0.0;
};

/// Grid-partitioned Takagi-Sugeno system. Membership functions are shared
/// per input partition; rules hold one index per input. Rule order is
/// lexicographic over the grid with input 0 most significant.
struct TsModel {
    int k = 0;
    std::vector<int> partition_counts;
    std::vector<std::vector<GaussianMf>> mfs;          // mfs[input][partition]
    std::vector<TsRule> rules;
    std::vector<std::pair<double, double>> input_ranges;

    int rule_count() const { return static_cast<int>(rules.size()); }
    double sigma_floor(int input) const;
};

/// Centers evenly spaced at a + (b-a)(i-1/2)/d, sigma (b-a)/(2d) * 1.2;
/// consequents zero. `jitter` > 0 perturbs centers by uniform(-j, j) * sigma.
TsModel init_grid_model(const std::vector<int>& partition_counts,
                        const std::vector<std::pair<double, double>>& input_ranges,
                        double jitter = 0.0, unsigned long long seed = 0);

std::vector<std::pair<double, double>> observed_ranges(const std::vector<LabeledVector>& data);

/// Product t-norm of the rule's Gaussian memberships.
double rule_firing(const TsModel& model, const TsRule& rule, const Eigen::VectorXd& x);

struct Inference {
    double y = 0.0;
    // Firing strengths rescaled so the largest is 1 (underflow-safe), paired
    // with each rule's linear output.
    std::vector<std::pair<double, double>> per_rule;
};

Inference infer(const TsModel& model, const Eigen::VectorXd& x);

double mse(const TsModel& model, const std::vector<LabeledVector>& data);

/// Ridge least-squares solve for all consequents with premises fixed. Keeps
/// the input consequents when they already score a lower training MSE, so the
/// result never regresses.
TsModel lse_consequents(const TsModel& model, const std::vector<LabeledVector>& data, double ridge);

struct PremiseGradient {
    std::vector<std::vector<double>> d_center;  // [input][partition]
    std::vector<std::vector<double>> d_sigma;
};

/// Exact analytic gradient of the training MSE w.r.t. all centers and sigmas.
PremiseGradient premise_gradient(const TsModel& model, const std::vector<LabeledVector>& data);

struct EpochResult {
    TsModel model;
    double train_mse = 0.0;
};

/// Forward LSE consequent solve, then one gradient step on the premises with
/// sigmas re-clamped to the floor.
EpochResult hybrid_epoch(const TsModel& model, const std::vector<LabeledVector>& data, double lr,
                         double lse_ridge = 1e-8);

} // namespace aufuzz::anfis
