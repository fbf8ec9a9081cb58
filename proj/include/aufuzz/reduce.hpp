#pragma once

#include <Eigen/Dense>

#include <vector>

namespace aufuzz::reduce {

enum class ClassLabel { negative = 0, positive = 1 };
enum class ReduceMode { pca, bda };

/// Scatter of positives (s_x) and negatives (s_y), both about the positive
/// centroid. Plain outer-product sums, no count normalization.
struct ScatterPair {
    Eigen::MatrixXd s_x;
    Eigen::MatrixXd s_y;
    Eigen::VectorXd centroid;
};

/// Learned reduction transforms: an optional matrix-direction (left/right)
/// pair, then a flatten, then a 1D PCA basis followed by the discriminant
/// basis w. Application is purely linear; no centering is performed, so
/// reduce(0) == 0 and the chain commutes with linear combinations.
struct ProjectionBasis {
    Eigen::MatrixXd left_basis;   // rows x r_rows; empty => identity
    Eigen::MatrixXd right_basis;  // cols x r_cols; empty => identity
    Eigen::MatrixXd pca_basis;    // flat_dim x pca_dim; empty => identity
    Eigen::MatrixXd w;            // pca_dim x r, generalized eigenvectors
    Eigen::VectorXd eigenvalues;  // r, non-increasing
    int r = 0;
};

struct TwoDReduction {
    Eigen::MatrixXd left;
    Eigen::MatrixXd right;
    std::vector<Eigen::MatrixXd> reduced;
};

/// Intermediate ranks of the 2DPCA -> 2DBDA -> flatten -> PCA -> BDA chain.
struct ChainConfig {
    int pca2d_rows = 16;
    int pca2d_cols = 8;
    int bda2d_rows = 6;
    int bda2d_cols = 4;
    int pca_dim = 12;
    int final_dim = 6;
    double ridge = -1.0;        // < 0 => default_ridge of each scatter
    bool normalize_output = true;  // scale w columns to unit max-abs on training data
};

double default_ridge(const Eigen::MatrixXd& s_x);

ScatterPair scatter_matrices(const std::vector<Eigen::VectorXd>& positives,
                             const std::vector<Eigen::VectorXd>& negatives);

/// Solves s_y a = lambda (s_x + ridge I) a by Cholesky whitening of the
/// regularized s_x and a symmetric eigensolve; returns the r eigenvectors
/// with largest eigenvalues, unit-norm, largest-magnitude component positive.
ProjectionBasis generalized_eig(const ScatterPair& pair, int r, double ridge);

struct PcaResult {
    Eigen::MatrixXd basis;                 // d x r, orthonormal columns
    Eigen::VectorXd eigenvalues;           // r, covariance eigenvalues (1/n)
    Eigen::VectorXd mean;                  // d
    std::vector<Eigen::VectorXd> projected;  // basis^T (x - mean)
};

PcaResult pca_reduce(const std::vector<Eigen::VectorXd>& vectors, int r);

/// One-pass matrix-direction reduction: row basis from M M^T-style scatter,
/// column basis from M^T M-style scatter, total scatter for pca and the
/// biased criterion for bda. reduced_k = left^T M_k right.
TwoDReduction two_d_reduce(const std::vector<Eigen::MatrixXd>& matrices,
                           const std::vector<ClassLabel>& labels,
                           int r_rows, int r_cols, ReduceMode mode,
                           double ridge = -1.0);

/// Fits the full chain on labeled training matrices.
ProjectionBasis fit_projection_basis(const std::vector<Eigen::MatrixXd>& matrices,
                                     const std::vector<ClassLabel>& labels,
                                     const ChainConfig& config);

Eigen::VectorXd reduce_sequence_features(const Eigen::MatrixXd& matrix,
                                         const ProjectionBasis& bases);

} // namespace aufuzz::reduce
