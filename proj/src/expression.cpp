#include "aufuzz/expression.hpp"

#include "aufuzz/textio.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace aufuzz::expr {

namespace {

double entropy(const std::array<double, kClassCount>& counts, double total) {
    if (total <= 0.0) return 0.0;
    double h = 0.0;
    for (double c : counts) {
        if (c > 0.0) {
            const double p = c / total;
            h -= p * std::log2(p);
        }
    }
    return h;
}

Expression majority(const std::array<double, kClassCount>& counts) {
    int best = 0;
    for (int c = 1; c < kClassCount; ++c)
        if (counts[c] > counts[best]) best = c;  // ties keep Table-3 class order
    return static_cast<Expression>(best);
}

double attribute_value(const IntensityRecord& rec, int au) {
    const auto it = rec.au_intensities.find(au);
    if (it == rec.au_intensities.end())
        throw std::runtime_error("expression: record missing AU " + std::to_string(au));
    return it->second;
}

// Inverse standard normal CDF (Acklam's rational approximation).
double inverse_normal_cdf(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("inverse_normal_cdf: p out of (0,1)");
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Pessimistic upper confidence bound on the error rate (normal approximation
// of the binomial, as used by C4.5-style pruning).
double pessimistic_errors(double errors, double n, double z) {
    if (n <= 0.0) return 0.0;
    const double f = errors / n;
    const double z2 = z * z;
    const double u = (f + z2 / (2.0 * n) +
                      z * std::sqrt(f / n - f * f / n + z2 / (4.0 * n * n))) /
                     (1.0 + z2 / n);
    return u * n;
}

struct Builder {
    const std::vector<IntensityRecord>& records;
    std::vector<double> weights;
    std::vector<int> attributes;  // sorted AU codes
    int min_leaf;

    std::unique_ptr<TreeNode> make_leaf(const std::vector<int>& idx) const {
        auto node = std::make_unique<TreeNode>();
        node->is_leaf = true;
        for (int i : idx) node->counts[static_cast<int>(records[i].label)] += weights[i];
        node->cls = majority(node->counts);
        return node;
    }

    std::unique_ptr<TreeNode> build(const std::vector<int>& idx) const {
        auto leaf = make_leaf(idx);
        double total = 0.0;
        int present = 0;
        for (double c : leaf->counts) {
            total += c;
            if (c > 0.0) ++present;
        }
        if (present <= 1 || total < 2.0 * min_leaf) return leaf;

        const double base_entropy = entropy(leaf->counts, total);
        int best_attr = -1;
        double best_threshold = 0.0;
        double best_ratio = 0.0;

        for (int au : attributes) {
            std::vector<std::pair<double, int>> sorted;
            sorted.reserve(idx.size());
            for (int i : idx) sorted.emplace_back(attribute_value(records[i], au), i);
            std::sort(sorted.begin(), sorted.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            std::array<double, kClassCount> left_counts{};
            double left_total = 0.0;
            for (std::size_t p = 0; p + 1 < sorted.size(); ++p) {
                const int i = sorted[p].second;
                left_counts[static_cast<int>(records[i].label)] += weights[i];
                left_total += weights[i];
                if (sorted[p].first == sorted[p + 1].first) continue;
                if (left_total < min_leaf || total - left_total < min_leaf) continue;

                std::array<double, kClassCount> right_counts{};
                for (int c = 0; c < kClassCount; ++c)
                    right_counts[c] = leaf->counts[c] - left_counts[c];
                const double right_total = total - left_total;
                const double pl = left_total / total;
                const double pr = right_total / total;
                const double gain = base_entropy - pl * entropy(left_counts, left_total) -
                                    pr * entropy(right_counts, right_total);
                if (gain <= 1e-12) continue;
                const double split_info = -(pl * std::log2(pl) + pr * std::log2(pr));
                if (split_info <= 0.0) continue;
                const double ratio = gain / split_info;
                if (ratio > best_ratio + 1e-12) {  // strict: first best keeps lowest AU/threshold
                    best_ratio = ratio;
                    best_attr = au;
                    best_threshold = 0.5 * (sorted[p].first + sorted[p + 1].first);
                }
            }
        }

        if (best_attr < 0) return leaf;

        std::vector<int> left_idx, right_idx;
        for (int i : idx) {
            if (attribute_value(records[i], best_attr) <= best_threshold)
                left_idx.push_back(i);
            else
                right_idx.push_back(i);
        }
        auto node = std::make_unique<TreeNode>();
        node->is_leaf = false;
        node->attribute = best_attr;
        node->threshold = best_threshold;
        node->counts = leaf->counts;
        node->cls = leaf->cls;
        node->left = build(left_idx);
        node->right = build(right_idx);
        return node;
    }
};

// Returns the subtree's pessimistic error estimate and collapses nodes whose
// estimate as a leaf is no worse.
double prune_node(TreeNode& node, double z) {
    double total = 0.0;
    for (double c : node.counts) total += c;
    const double leaf_errors = total - node.counts[static_cast<int>(majority(node.counts))];
    const double as_leaf = pessimistic_errors(leaf_errors, total, z);
    if (node.is_leaf) return as_leaf;

    const double subtree = prune_node(*node.left, z) + prune_node(*node.right, z);
    if (as_leaf <= subtree + 0.1) {
        node.is_leaf = true;
        node.cls = majority(node.counts);
        node.left.reset();
        node.right.reset();
        return as_leaf;
    }
    return subtree;
}

int count_leaves(const TreeNode& node) {
    if (node.is_leaf) return 1;
    return count_leaves(*node.left) + count_leaves(*node.right);
}

void export_node(const TreeNode& node, std::vector<std::string>& conditions, std::ostringstream& out) {
    if (node.is_leaf) {
        double total = 0.0;
        for (double c : node.counts) total += c;
        out << "IF ";
        if (conditions.empty()) {
            out << "TRUE";
        } else {
            for (std::size_t i = 0; i < conditions.size(); ++i) {
                if (i) out << " AND ";
                out << conditions[i];
            }
        }
        out << " THEN " << class_names()[static_cast<int>(node.cls)] << " (support="
            << format_double(total) << ")\n";
        return;
    }
    conditions.push_back("AU" + std::to_string(node.attribute) + " <= " +
                         format_double(node.threshold));
    export_node(*node.left, conditions, out);
    conditions.back() = "AU" + std::to_string(node.attribute) + " > " +
                        format_double(node.threshold);
    export_node(*node.right, conditions, out);
    conditions.pop_back();
}

DecisionTree induce(const std::vector<IntensityRecord>& records, int min_leaf,
                    const std::vector<double>& weights) {
    if (records.empty()) throw std::invalid_argument("train_tree: empty records");
    if (min_leaf < 1) throw std::invalid_argument("train_tree: min_leaf must be >= 1");
    Builder builder{records, weights, {}, min_leaf};
    if (builder.weights.empty()) builder.weights.assign(records.size(), 1.0);
    if (builder.weights.size() != records.size())
        throw std::invalid_argument("train_tree: weights/records size mismatch");

    std::set<int> aus;
    for (const auto& r : records)
        for (const auto& [au, v] : r.au_intensities) aus.insert(au);
    builder.attributes.assign(aus.begin(), aus.end());

    std::vector<int> idx(records.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    DecisionTree tree;
    tree.root = builder.build(idx);
    return tree;
}

} // namespace

const std::array<std::string, kClassCount>& class_names() {
    static const std::array<std::string, kClassCount> names = {"surprise", "gloomy", "fear",
                                                               "happy",    "angry",  "disgust"};
    return names;
}

Expression class_from_name(const std::string& name) {
    const auto& names = class_names();
    for (int i = 0; i < kClassCount; ++i)
        if (names[i] == name) return static_cast<Expression>(i);
    throw std::runtime_error("unknown expression class '" + name + "'");
}

int DecisionTree::leaf_count() const { return root ? count_leaves(*root) : 0; }

DecisionTree train_tree_unpruned(const std::vector<IntensityRecord>& records, int min_leaf,
                                 const std::vector<double>& weights) {
    return induce(records, min_leaf, weights);
}

DecisionTree train_tree(const std::vector<IntensityRecord>& records, int min_leaf,
                        double confidence, const std::vector<double>& weights) {
    if (confidence <= 0.0 || confidence >= 1.0)
        throw std::invalid_argument("train_tree: confidence must be in (0,1)");
    DecisionTree tree = induce(records, min_leaf, weights);
    const double z = inverse_normal_cdf(1.0 - confidence);
    prune_node(*tree.root, z);
    return tree;
}

Expression classify(const DecisionTree& tree, const std::map<int, double>& intensities) {
    if (!tree.root) throw std::runtime_error("classify: empty tree");
    const TreeNode* node = tree.root.get();
    while (!node->is_leaf) {
        const auto it = intensities.find(node->attribute);
        if (it == intensities.end())
            throw std::runtime_error("classify: missing tested attribute AU" +
                                     std::to_string(node->attribute));
        node = it->second <= node->threshold ? node->left.get() : node->right.get();
    }
    return node->cls;
}

std::string export_rules(const DecisionTree& tree) {
    if (!tree.root) throw std::runtime_error("export_rules: empty tree");
    std::ostringstream out;
    std::vector<std::string> conditions;
    export_node(*tree.root, conditions, out);
    return out.str();
}

ConfusionReport confusion_from_pairs(const std::vector<std::pair<Expression, Expression>>& pairs) {
    if (pairs.empty()) throw std::invalid_argument("confusion_matrix: empty records");
    ConfusionReport rep;
    for (const auto& [truth, pred] : pairs)
        rep.counts[static_cast<int>(truth)][static_cast<int>(pred)] += 1.0;

    double total = 0.0;
    double correct = 0.0;
    std::array<double, kClassCount> row_sums{}, col_sums{};
    for (int t = 0; t < kClassCount; ++t) {
        for (int p = 0; p < kClassCount; ++p) {
            total += rep.counts[t][p];
            row_sums[t] += rep.counts[t][p];
            col_sums[p] += rep.counts[t][p];
        }
        correct += rep.counts[t][t];
    }
    rep.accuracy = correct / total;
    for (int c = 0; c < kClassCount; ++c) {
        rep.tp_rate[c] = row_sums[c] > 0.0 ? rep.counts[c][c] / row_sums[c] : 0.0;
        const double neg = total - row_sums[c];
        rep.fp_rate[c] = neg > 0.0 ? (col_sums[c] - rep.counts[c][c]) / neg : 0.0;
        rep.precision[c] = col_sums[c] > 0.0 ? rep.counts[c][c] / col_sums[c] : 0.0;
    }
    return rep;
}

ConfusionReport confusion_matrix(const DecisionTree& tree,
                                 const std::vector<IntensityRecord>& records) {
    std::vector<std::pair<Expression, Expression>> pairs;
    pairs.reserve(records.size());
    for (const auto& r : records) pairs.emplace_back(r.label, classify(tree, r.au_intensities));
    return confusion_from_pairs(pairs);
}

std::string format_confusion(const ConfusionReport& report) {
    std::ostringstream out;
    out << "classified as ->";
    for (const auto& n : class_names()) out << " " << n;
    out << "\n";
    for (int t = 0; t < kClassCount; ++t) {
        out << class_names()[t];
        for (int p = 0; p < kClassCount; ++p) out << " " << report.counts[t][p];
        out << "\n";
    }
    char acc[32];
    std::snprintf(acc, sizeof(acc), "%.3f", report.accuracy * 100.0);
    out << "accuracy " << acc << "%\n";
    out << "class tp_rate fp_rate precision\n";
    for (int c = 0; c < kClassCount; ++c) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%s %.3f %.3f %.3f\n", class_names()[c].c_str(),
                      report.tp_rate[c], report.fp_rate[c], report.precision[c]);
        out << buf;
    }
    return out.str();
}

} // namespace aufuzz::expr
