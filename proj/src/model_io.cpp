#include "aufuzz/model_io.hpp"

#include "aufuzz/textio.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace aufuzz::cli {

namespace {

void expect_token(std::istream& in, const std::string& expected) {
    std::string tok;
    if (!(in >> tok) || tok != expected)
        throw std::runtime_error("model container: expected '" + expected + "', found '" + tok + "'");
}

void write_header(std::ostream& out, const std::string& kind, const Config& snapshot) {
    out << "aufuzz-model " << kModelFormatVersion << "\n";
    out << "kind " << kind << "\n";
    out << "config " << snapshot.entries().size() << "\n";
    for (const auto& [key, value] : snapshot.entries()) out << key << " " << value << "\n";
}

std::string read_header(std::istream& in, Config* snapshot_out) {
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "aufuzz-model")
        throw std::runtime_error("model container: bad magic");
    if (version != kModelFormatVersion)
        throw std::runtime_error("model container: version mismatch (file " +
                                 std::to_string(version) + ", supported " +
                                 std::to_string(kModelFormatVersion) + ")");
    expect_token(in, "kind");
    std::string kind;
    in >> kind;
    expect_token(in, "config");
    std::size_t n = 0;
    in >> n;
    in.ignore();
    for (std::size_t i = 0; i < n; ++i) {
        std::string line;
        std::getline(in, line);
        const std::size_t sp = line.find(' ');
        if (sp == std::string::npos)
            throw std::runtime_error("model container: malformed config line '" + line + "'");
        if (snapshot_out) snapshot_out->set(line.substr(0, sp), line.substr(sp + 1));
    }
    return kind;
}

void save_container(const std::string& path, const std::string& kind, const Config& snapshot,
                    const std::function<void(std::ostream&)>& body) {
    std::ostringstream out;
    write_header(out, kind, snapshot);
    body(out);
    out << "end\n";
    atomic_write_file(path, out.str());
}

std::string load_container(const std::string& path, const std::string& expected_kind,
                           Config* snapshot_out, const std::function<void(std::istream&)>& body) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("model container: cannot open " + path);
    const std::string kind = read_header(in, snapshot_out);
    if (!expected_kind.empty() && kind != expected_kind)
        throw std::runtime_error("model container: expected kind '" + expected_kind +
                                 "', found '" + kind + "' in " + path);
    body(in);
    expect_token(in, "end");
    return kind;
}

void write_tree_node(std::ostream& out, const expr::TreeNode& node) {
    if (node.is_leaf) {
        out << "leaf " << static_cast<int>(node.cls);
        for (double c : node.counts) out << " " << format_double(c);
        out << "\n";
        return;
    }
    out << "node " << node.attribute << " " << format_double(node.threshold);
    for (double c : node.counts) out << " " << format_double(c);
    out << "\n";
    write_tree_node(out, *node.left);
    write_tree_node(out, *node.right);
}

std::unique_ptr<expr::TreeNode> read_tree_node(std::istream& in) {
    std::string tag;
    if (!(in >> tag)) throw std::runtime_error("model container: truncated tree");
    auto node = std::make_unique<expr::TreeNode>();
    std::string tok;
    if (tag == "leaf") {
        node->is_leaf = true;
        int cls = 0;
        in >> cls;
        if (cls < 0 || cls >= expr::kClassCount)
            throw std::runtime_error("model container: bad class index in tree");
        node->cls = static_cast<expr::Expression>(cls);
        for (double& c : node->counts) {
            in >> tok;
            c = parse_double(tok);
        }
    } else if (tag == "node") {
        node->is_leaf = false;
        in >> node->attribute;
        in >> tok;
        node->threshold = parse_double(tok);
        for (double& c : node->counts) {
            in >> tok;
            c = parse_double(tok);
        }
        node->cls = expr::Expression::surprise;
        node->left = read_tree_node(in);
        node->right = read_tree_node(in);
    } else {
        throw std::runtime_error("model container: unexpected tree tag '" + tag + "'");
    }
    return node;
}

} // namespace

std::string model_kind(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("model container: cannot open " + path);
    return read_header(in, nullptr);
}

void write_basis(std::ostream& out, const std::string& tag, const reduce::ProjectionBasis& basis) {
    out << "basis " << tag << " " << basis.r << "\n";
    write_matrix(out, "left_basis", basis.left_basis);
    write_matrix(out, "right_basis", basis.right_basis);
    write_matrix(out, "pca_basis", basis.pca_basis);
    write_matrix(out, "w", basis.w);
    write_vector(out, "eigenvalues", basis.eigenvalues);
}

reduce::ProjectionBasis read_basis(std::istream& in, const std::string& tag) {
    expect_token(in, "basis");
    expect_token(in, tag);
    reduce::ProjectionBasis basis;
    in >> basis.r;
    basis.left_basis = read_matrix(in, "left_basis");
    basis.right_basis = read_matrix(in, "right_basis");
    basis.pca_basis = read_matrix(in, "pca_basis");
    basis.w = read_matrix(in, "w");
    basis.eigenvalues = read_vector(in, "eigenvalues");
    return basis;
}

void write_ts_model(std::ostream& out, const std::string& tag, const anfis::TsModel& model) {
    out << "tsmodel " << tag << "\n";
    out << "inputs " << model.k << "\n";
    out << "partitions";
    for (int d : model.partition_counts) out << " " << d;
    out << "\n";
    for (int j = 0; j < model.k; ++j)
        out << "range " << j << " " << format_double(model.input_ranges[j].first) << " "
            << format_double(model.input_ranges[j].second) << "\n";
    for (int j = 0; j < model.k; ++j) {
        out << "mfs " << j << " " << model.mfs[j].size() << "\n";
        for (const auto& mf : model.mfs[j])
            out << format_double(mf.center) << " " << format_double(mf.sigma) << "\n";
    }
    out << "rules " << model.rules.size() << "\n";
    for (const auto& rule : model.rules) {
        for (int idx : rule.mf_index) out << idx << " ";
        for (Eigen::Index i = 0; i < rule.coeff.size(); ++i) {
            if (i) out << " ";
            out << format_double(rule.coeff[i]);
        }
        out << "\n";
    }
}

anfis::TsModel read_ts_model(std::istream& in, const std::string& tag) {
    expect_token(in, "tsmodel");
    expect_token(in, tag);
    anfis::TsModel model;
    expect_token(in, "inputs");
    in >> model.k;
    if (model.k < 1) throw std::runtime_error("model container: bad input count");
    expect_token(in, "partitions");
    model.partition_counts.resize(static_cast<std::size_t>(model.k));
    for (int& d : model.partition_counts) in >> d;

    std::string tok;
    model.input_ranges.resize(static_cast<std::size_t>(model.k));
    for (int j = 0; j < model.k; ++j) {
        expect_token(in, "range");
        int idx = 0;
        in >> idx >> tok;
        model.input_ranges[static_cast<std::size_t>(idx)].first = parse_double(tok);
        in >> tok;
        model.input_ranges[static_cast<std::size_t>(idx)].second = parse_double(tok);
    }
    model.mfs.resize(static_cast<std::size_t>(model.k));
    for (int j = 0; j < model.k; ++j) {
        expect_token(in, "mfs");
        int idx = 0;
        std::size_t count = 0;
        in >> idx >> count;
        auto& mfs = model.mfs[static_cast<std::size_t>(idx)];
        mfs.resize(count);
        for (auto& mf : mfs) {
            in >> tok;
            mf.center = parse_double(tok);
            in >> tok;
            mf.sigma = parse_double(tok);
        }
    }
    expect_token(in, "rules");
    std::size_t n_rules = 0;
    in >> n_rules;
    model.rules.resize(n_rules);
    for (auto& rule : model.rules) {
        rule.mf_index.resize(static_cast<std::size_t>(model.k));
        for (int& idx : rule.mf_index) in >> idx;
        rule.coeff.resize(model.k + 1);
        for (Eigen::Index i = 0; i < rule.coeff.size(); ++i) {
            in >> tok;
            rule.coeff[i] = parse_double(tok);
        }
    }
    return model;
}

void save_au_model(const pipeline::AuModel& model, const Config& snapshot,
                   const std::string& path) {
    save_container(path, "au-model", snapshot, [&](std::ostream& out) {
        out << "au " << model.au << "\n";
        out << "region " << (model.region == Region::upper ? "upper" : "lower") << "\n";
        out << "threshold " << format_double(model.threshold) << "\n";
        write_basis(out, "geo", model.geo_basis);
        write_basis(out, "app", model.app_basis);
        write_ts_model(out, "geo", model.geo_model);
        write_ts_model(out, "app", model.app_model);
    });
}

pipeline::AuModel load_au_model(const std::string& path, Config* snapshot_out) {
    pipeline::AuModel model;
    load_container(path, "au-model", snapshot_out, [&](std::istream& in) {
        expect_token(in, "au");
        in >> model.au;
        expect_token(in, "region");
        std::string region;
        in >> region;
        model.region = region == "upper" ? Region::upper : Region::lower;
        expect_token(in, "threshold");
        std::string tok;
        in >> tok;
        model.threshold = parse_double(tok);
        model.geo_basis = read_basis(in, "geo");
        model.app_basis = read_basis(in, "app");
        model.geo_model = read_ts_model(in, "geo");
        model.app_model = read_ts_model(in, "app");
    });
    return model;
}

void save_expression_tree(const expr::DecisionTree& tree, const Config& snapshot,
                          const std::string& path) {
    if (!tree.root) throw std::invalid_argument("save_expression_tree: empty tree");
    save_container(path, "expression-tree", snapshot, [&](std::ostream& out) {
        out << "tree\n";
        write_tree_node(out, *tree.root);
    });
}

expr::DecisionTree load_expression_tree(const std::string& path, Config* snapshot_out) {
    expr::DecisionTree tree;
    load_container(path, "expression-tree", snapshot_out, [&](std::istream& in) {
        expect_token(in, "tree");
        tree.root = read_tree_node(in);
    });
    return tree;
}

void save_projection_basis(const reduce::ProjectionBasis& basis, const Config& snapshot,
                           const std::string& path) {
    save_container(path, "bases", snapshot,
                   [&](std::ostream& out) { write_basis(out, "main", basis); });
}

reduce::ProjectionBasis load_projection_basis(const std::string& path, Config* snapshot_out) {
    reduce::ProjectionBasis basis;
    load_container(path, "bases", snapshot_out,
                   [&](std::istream& in) { basis = read_basis(in, "main"); });
    return basis;
}

} // namespace aufuzz::cli
