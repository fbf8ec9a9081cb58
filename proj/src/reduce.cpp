#include "aufuzz/reduce.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace aufuzz::reduce {

namespace {

// Deterministic serialization: largest-magnitude component made positive.
void fix_column_signs(Eigen::MatrixXd& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        Eigen::Index imax = 0;
        m.col(c).cwiseAbs().maxCoeff(&imax);
        if (m(imax, c) < 0.0) m.col(c) = -m.col(c);
    }
}

// Top-r eigenpairs of a symmetric matrix, eigenvalues descending.
void top_symmetric_eig(const Eigen::MatrixXd& s, int r,
                       Eigen::MatrixXd& basis, Eigen::VectorXd& values) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("reduce: symmetric eigensolve failed");
    const Eigen::Index d = s.rows();
    basis.resize(d, r);
    values.resize(r);
    for (int i = 0; i < r; ++i) {
        basis.col(i) = solver.eigenvectors().col(d - 1 - i);
        values[i] = solver.eigenvalues()[d - 1 - i];
    }
    fix_column_signs(basis);
}

Eigen::VectorXd flatten_row_major(const Eigen::MatrixXd& m) {
    Eigen::VectorXd v(m.size());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) v[k++] = m(i, j);
    return v;
}

struct MatrixScatters {
    Eigen::MatrixXd row_x, row_y;  // M M^T-style, about positive mean
    Eigen::MatrixXd col_x, col_y;  // M^T M-style
};

MatrixScatters matrix_scatters(const std::vector<Eigen::MatrixXd>& matrices,
                               const std::vector<ClassLabel>& labels) {
    const Eigen::Index a = matrices[0].rows();
    const Eigen::Index b = matrices[0].cols();
    Eigen::MatrixXd pos_mean = Eigen::MatrixXd::Zero(a, b);
    int n_pos = 0;
    for (std::size_t k = 0; k < matrices.size(); ++k) {
        if (labels[k] == ClassLabel::positive) {
            pos_mean += matrices[k];
            ++n_pos;
        }
    }
    if (n_pos == 0) throw std::invalid_argument("two_d_reduce: bda requires positive samples");
    pos_mean /= n_pos;

    MatrixScatters s;
    s.row_x = Eigen::MatrixXd::Zero(a, a);
    s.row_y = Eigen::MatrixXd::Zero(a, a);
    s.col_x = Eigen::MatrixXd::Zero(b, b);
    s.col_y = Eigen::MatrixXd::Zero(b, b);
    for (std::size_t k = 0; k < matrices.size(); ++k) {
        const Eigen::MatrixXd d = matrices[k] - pos_mean;
        if (labels[k] == ClassLabel::positive) {
            s.row_x += d * d.transpose();
            s.col_x += d.transpose() * d;
        } else {
            s.row_y += d * d.transpose();
            s.col_y += d.transpose() * d;
        }
    }
    return s;
}

Eigen::MatrixXd bda_direction_basis(const Eigen::MatrixXd& s_x, const Eigen::MatrixXd& s_y,
                                    int r, double ridge) {
    ScatterPair pair;
    pair.s_x = s_x;
    pair.s_y = s_y;
    pair.centroid = Eigen::VectorXd::Zero(s_x.rows());
    const double rr = ridge < 0.0 ? default_ridge(s_x) : ridge;
    return generalized_eig(pair, r, rr).w;
}

} // namespace

double default_ridge(const Eigen::MatrixXd& s_x) {
    const double t = s_x.trace() / static_cast<double>(s_x.rows());
    // Absolute floor keeps the Cholesky factorizable when s_x vanishes.
    return std::max(1e-6 * t, 1e-12);
}

ScatterPair scatter_matrices(const std::vector<Eigen::VectorXd>& positives,
                             const std::vector<Eigen::VectorXd>& negatives) {
    if (positives.empty()) throw std::invalid_argument("scatter_matrices: empty positive set");
    if (negatives.empty()) throw std::invalid_argument("scatter_matrices: empty negative set");
    const Eigen::Index d = positives[0].size();
    for (const auto& v : positives)
        if (v.size() != d) throw std::invalid_argument("scatter_matrices: dimension mismatch");
    for (const auto& v : negatives)
        if (v.size() != d) throw std::invalid_argument("scatter_matrices: dimension mismatch");

    ScatterPair pair;
    pair.centroid = Eigen::VectorXd::Zero(d);
    for (const auto& v : positives) pair.centroid += v;
    pair.centroid /= static_cast<double>(positives.size());

    pair.s_x = Eigen::MatrixXd::Zero(d, d);
    for (const auto& v : positives) {
        const Eigen::VectorXd c = v - pair.centroid;
        pair.s_x += c * c.transpose();
    }
    pair.s_y = Eigen::MatrixXd::Zero(d, d);
    for (const auto& v : negatives) {
        const Eigen::VectorXd c = v - pair.centroid;
        pair.s_y += c * c.transpose();
    }
    return pair;
}

ProjectionBasis generalized_eig(const ScatterPair& pair, int r, double ridge) {
    const Eigen::Index d = pair.s_x.rows();
    if (r < 0 || r > d) throw std::invalid_argument("generalized_eig: r out of range");
    if (ridge < 0.0) throw std::invalid_argument("generalized_eig: negative ridge");

    Eigen::MatrixXd reg = pair.s_x + ridge * Eigen::MatrixXd::Identity(d, d);
    Eigen::LLT<Eigen::MatrixXd> llt(reg);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("generalized_eig: regularized s_x not positive definite (ridge too small)");
    const Eigen::MatrixXd l = llt.matrixL();

    // Whiten: B = L^-1 s_y L^-T is symmetric; its eigenpairs map back via L^-T.
    Eigen::MatrixXd b = l.triangularView<Eigen::Lower>().solve(pair.s_y);
    b = l.triangularView<Eigen::Lower>().solve(b.transpose().eval());
    b = 0.5 * (b + b.transpose().eval());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("generalized_eig: eigensolve failed");

    ProjectionBasis basis;
    basis.r = r;
    basis.w.resize(d, r);
    basis.eigenvalues.resize(r);
    for (int i = 0; i < r; ++i) {
        const Eigen::Index src = d - 1 - i;
        Eigen::VectorXd alpha =
            l.transpose().triangularView<Eigen::Upper>().solve(solver.eigenvectors().col(src));
        const double norm = alpha.norm();
        if (norm > 0.0) alpha /= norm;
        basis.w.col(i) = alpha;
        basis.eigenvalues[i] = solver.eigenvalues()[src];
    }
    fix_column_signs(basis.w);
    return basis;
}

PcaResult pca_reduce(const std::vector<Eigen::VectorXd>& vectors, int r) {
    if (vectors.empty()) throw std::invalid_argument("pca_reduce: no data");
    const Eigen::Index d = vectors[0].size();
    const Eigen::Index n = static_cast<Eigen::Index>(vectors.size());
    if (r < 1 || r > std::min(d, n)) throw std::invalid_argument("pca_reduce: r out of range");

    PcaResult res;
    res.mean = Eigen::VectorXd::Zero(d);
    for (const auto& v : vectors) {
        if (v.size() != d) throw std::invalid_argument("pca_reduce: dimension mismatch");
        res.mean += v;
    }
    res.mean /= static_cast<double>(n);

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (const auto& v : vectors) {
        const Eigen::VectorXd c = v - res.mean;
        cov += c * c.transpose();
    }
    cov /= static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw std::runtime_error("pca_reduce: eigensolve failed");
    const double lmax = solver.eigenvalues()[d - 1];
    int rank = 0;
    for (Eigen::Index i = 0; i < d; ++i)
        if (solver.eigenvalues()[i] > 1e-10 * std::max(lmax, 0.0) && solver.eigenvalues()[i] > 0.0) ++rank;
    if (r > rank)
        throw std::runtime_error("pca_reduce: r exceeds available rank " + std::to_string(rank));

    res.basis.resize(d, r);
    res.eigenvalues.resize(r);
    for (int i = 0; i < r; ++i) {
        res.basis.col(i) = solver.eigenvectors().col(d - 1 - i);
        res.eigenvalues[i] = solver.eigenvalues()[d - 1 - i];
    }
    fix_column_signs(res.basis);

    res.projected.reserve(vectors.size());
    for (const auto& v : vectors) res.projected.push_back(res.basis.transpose() * (v - res.mean));
    return res;
}

TwoDReduction two_d_reduce(const std::vector<Eigen::MatrixXd>& matrices,
                           const std::vector<ClassLabel>& labels,
                           int r_rows, int r_cols, ReduceMode mode, double ridge) {
    if (matrices.empty()) throw std::invalid_argument("two_d_reduce: no data");
    const Eigen::Index a = matrices[0].rows();
    const Eigen::Index b = matrices[0].cols();
    for (const auto& m : matrices)
        if (m.rows() != a || m.cols() != b)
            throw std::invalid_argument("two_d_reduce: inconsistent matrix shapes");
    if (r_rows < 1 || r_rows > a || r_cols < 1 || r_cols > b)
        throw std::invalid_argument("two_d_reduce: r exceeds matrix dimension");

    TwoDReduction out;
    if (mode == ReduceMode::pca) {
        Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(a, b);
        for (const auto& m : matrices) mean += m;
        mean /= static_cast<double>(matrices.size());
        Eigen::MatrixXd row_scatter = Eigen::MatrixXd::Zero(a, a);
        Eigen::MatrixXd col_scatter = Eigen::MatrixXd::Zero(b, b);
        for (const auto& m : matrices) {
            const Eigen::MatrixXd d = m - mean;
            row_scatter += d * d.transpose();
            col_scatter += d.transpose() * d;
        }
        Eigen::VectorXd unused;
        top_symmetric_eig(row_scatter, r_rows, out.left, unused);
        top_symmetric_eig(col_scatter, r_cols, out.right, unused);
    } else {
        if (labels.size() != matrices.size())
            throw std::invalid_argument("two_d_reduce: labels/matrices size mismatch");
        bool has_neg = false;
        for (ClassLabel l : labels) has_neg = has_neg || l == ClassLabel::negative;
        if (!has_neg) throw std::invalid_argument("two_d_reduce: bda requires negative samples");
        const MatrixScatters s = matrix_scatters(matrices, labels);
        out.left = bda_direction_basis(s.row_x, s.row_y, r_rows, ridge);
        out.right = bda_direction_basis(s.col_x, s.col_y, r_cols, ridge);
    }

    out.reduced.reserve(matrices.size());
    for (const auto& m : matrices) out.reduced.push_back(out.left.transpose() * m * out.right);
    return out;
}

ProjectionBasis fit_projection_basis(const std::vector<Eigen::MatrixXd>& matrices,
                                     const std::vector<ClassLabel>& labels,
                                     const ChainConfig& config) {
    if (matrices.empty()) throw std::invalid_argument("fit_projection_basis: no data");
    const int a = static_cast<int>(matrices[0].rows());
    const int b = static_cast<int>(matrices[0].cols());

    const int r1r = std::clamp(config.pca2d_rows, 1, a);
    const int r1c = std::clamp(config.pca2d_cols, 1, b);
    TwoDReduction stage_pca = two_d_reduce(matrices, labels, r1r, r1c, ReduceMode::pca);

    const int r2r = std::clamp(config.bda2d_rows, 1, r1r);
    const int r2c = std::clamp(config.bda2d_cols, 1, r1c);
    TwoDReduction stage_bda =
        two_d_reduce(stage_pca.reduced, labels, r2r, r2c, ReduceMode::bda, config.ridge);

    ProjectionBasis basis;
    basis.left_basis = stage_pca.left * stage_bda.left;
    basis.right_basis = stage_pca.right * stage_bda.right;

    std::vector<Eigen::VectorXd> flat;
    flat.reserve(matrices.size());
    for (const auto& m : stage_bda.reduced) flat.push_back(flatten_row_major(m));
    const int flat_dim = static_cast<int>(flat[0].size());

    // PCA rank can fall below the requested dimension on degenerate data;
    // the chain lowers it instead of failing.
    {
        std::vector<Eigen::VectorXd> centered_probe = flat;
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(flat_dim);
        for (const auto& v : flat) mean += v;
        mean /= static_cast<double>(flat.size());
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(flat_dim, flat_dim);
        for (const auto& v : flat) {
            const Eigen::VectorXd c = v - mean;
            cov += c * c.transpose();
        }
        cov /= static_cast<double>(flat.size());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
        const double lmax = solver.eigenvalues()[flat_dim - 1];
        int rank = 0;
        for (int i = 0; i < flat_dim; ++i)
            if (solver.eigenvalues()[i] > 1e-10 * std::max(lmax, 0.0) && solver.eigenvalues()[i] > 0.0)
                ++rank;
        rank = std::max(rank, 1);
        const int pdim = std::clamp(config.pca_dim, 1,
                                    std::min({flat_dim, static_cast<int>(flat.size()), rank}));
        basis.pca_basis = pca_reduce(flat, pdim).basis;
    }

    std::vector<Eigen::VectorXd> pos, neg;
    std::vector<Eigen::VectorXd> projected;
    projected.reserve(flat.size());
    for (std::size_t k = 0; k < flat.size(); ++k) {
        Eigen::VectorXd u = basis.pca_basis.transpose() * flat[k];
        projected.push_back(u);
        (labels[k] == ClassLabel::positive ? pos : neg).push_back(u);
    }
    if (neg.empty()) throw std::invalid_argument("fit_projection_basis: no negative samples");

    const ScatterPair pair = scatter_matrices(pos, neg);
    const double ridge = config.ridge < 0.0 ? default_ridge(pair.s_x) : config.ridge;
    const int r = std::clamp(config.final_dim, 1, static_cast<int>(basis.pca_basis.cols()));
    const ProjectionBasis bda = generalized_eig(pair, r, ridge);
    basis.w = bda.w;
    basis.eigenvalues = bda.eigenvalues;
    basis.r = r;

    if (config.normalize_output) {
        Eigen::VectorXd scale = Eigen::VectorXd::Zero(r);
        for (const auto& u : projected)
            scale = scale.cwiseMax((basis.w.transpose() * u).cwiseAbs());
        for (int j = 0; j < r; ++j)
            if (scale[j] > 0.0) basis.w.col(j) /= scale[j];
    }
    return basis;
}

Eigen::VectorXd reduce_sequence_features(const Eigen::MatrixXd& matrix,
                                         const ProjectionBasis& bases) {
    Eigen::MatrixXd m = matrix;
    if (bases.left_basis.size() > 0) {
        if (bases.left_basis.rows() != m.rows())
            throw std::invalid_argument("reduce_sequence_features: row shape mismatch with trained bases");
        m = bases.left_basis.transpose() * m;
    }
    if (bases.right_basis.size() > 0) {
        if (bases.right_basis.rows() != m.cols())
            throw std::invalid_argument("reduce_sequence_features: column shape mismatch with trained bases");
        m = m * bases.right_basis;
    }
    Eigen::VectorXd v = flatten_row_major(m);
    if (bases.pca_basis.size() > 0) {
        if (bases.pca_basis.rows() != v.size())
            throw std::invalid_argument("reduce_sequence_features: flattened size mismatch with trained bases");
        v = bases.pca_basis.transpose() * v;
    }
    if (bases.w.rows() != v.size())
        throw std::invalid_argument("reduce_sequence_features: 1D basis shape mismatch");
    return bases.w.transpose() * v;
}

} // namespace aufuzz::reduce
