#pragma once

#include <array>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace aufuzz::expr {

inline constexpr int kClassCount = 6;

enum class Expression { surprise = 0, gloomy, fear, happy, angry, disgust };

const std::array<std::string, kClassCount>& class_names();
Expression class_from_name(const std::string& name);

struct IntensityRecord {
    std::map<int, double> au_intensities;  // AU code -> fused intensity, clamped [0, 2]
    Expression label = Expression::surprise;
};

struct TreeNode {
    bool is_leaf = true;
    // internal
    int attribute = -1;       // AU code
    double threshold = 0.0;   // x <= threshold goes left
    std::unique_ptr<TreeNode> left, right;
    // leaf
    Expression cls = Expression::surprise;
    std::array<double, kClassCount> counts{};  // training support (weighted)
};

struct DecisionTree {
    std::unique_ptr<TreeNode> root;

    int leaf_count() const;
};

/// C4.5-style induction: binary splits on continuous attributes at midpoints
/// between sorted distinct values, chosen by gain ratio, then error-based
/// pruning at the given confidence. Weights default to 1 per record.
DecisionTree train_tree(const std::vector<IntensityRecord>& records, int min_leaf,
                        double confidence, const std::vector<double>& weights = {});

/// Same induction without the pruning pass.
DecisionTree train_tree_unpruned(const std::vector<IntensityRecord>& records, int min_leaf,
                                 const std::vector<double>& weights = {});

Expression classify(const DecisionTree& tree, const std::map<int, double>& intensities);

/// One rule per leaf: a conjunction of threshold tests, the class, and the
/// leaf's training support.
std::string export_rules(const DecisionTree& tree);

struct ConfusionReport {
    std::array<std::array<double, kClassCount>, kClassCount> counts{};  // [truth][predicted]
    double accuracy = 0.0;
    std::array<double, kClassCount> tp_rate{};
    std::array<double, kClassCount> fp_rate{};
    std::array<double, kClassCount> precision{};
};

ConfusionReport confusion_matrix(const DecisionTree& tree,
                                 const std::vector<IntensityRecord>& records);
ConfusionReport confusion_from_pairs(const std::vector<std::pair<Expression, Expression>>& pairs);

std::string format_confusion(const ConfusionReport& report);

} // namespace aufuzz::expr
