#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

// Independent numerical oracles for the test suites. Everything here avoids
// the code paths used by the library: eigenvalues come from a hand-rolled
// cyclic Jacobi sweep, generalized eigenvalues from inertia bisection, and
// matrix products from explicit triple loops.
namespace oracles {

// Cyclic Jacobi eigenvalue iteration for small symmetric matrices.
inline std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a, double tol = 1e-14) {
    const int n = static_cast<int>(a.rows());
    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < tol * tol) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> evs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) evs[static_cast<std::size_t>(i)] = a(i, i);
    std::sort(evs.begin(), evs.end());
    return evs;
}

inline int count_negative_eigenvalues(const Eigen::MatrixXd& m) {
    int count = 0;
    for (double ev : jacobi_eigenvalues(m))
        if (ev < 0.0) ++count;
    return count;
}

// Generalized eigenvalues of s_y a = lambda r a (r SPD) by bisection on the
// inertia of (s_y - lambda r); returns all eigenvalues descending.
inline std::vector<double> generalized_eigenvalues_bisect(const Eigen::MatrixXd& s_y,
                                                          const Eigen::MatrixXd& r) {
    const int n = static_cast<int>(s_y.rows());
    const std::vector<double> sy_evs = jacobi_eigenvalues(s_y);
    const std::vector<double> r_evs = jacobi_eigenvalues(r);
    const double r_min = r_evs.front();
    if (r_min <= 0.0) throw std::runtime_error("oracle: metric not positive definite");
    double hi = std::max(1.0, sy_evs.back() / r_min) * 1.01 + 1.0;
    double lo_all = std::min(0.0, sy_evs.front() / r_min) * 1.01 - 1.0;

    const auto count_below = [&](double lambda) {
        return count_negative_eigenvalues(s_y - lambda * r);
    };

    std::vector<double> out;
    for (int i = 0; i < n; ++i) {
        // i-th smallest eigenvalue: smallest lambda with count_below > i.
        double lo = lo_all, up = hi;
        for (int iter = 0; iter < 200; ++iter) {
            const double mid = 0.5 * (lo + up);
            if (count_below(mid) > i)
                up = mid;
            else
                lo = mid;
            if (up - lo < 1e-13 * std::max(1.0, std::abs(up))) break;
        }
        out.push_back(0.5 * (lo + up));
    }
    std::sort(out.rbegin(), out.rend());
    return out;
}

inline Eigen::MatrixXd naive_matmul(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.cols() != b.rows()) throw std::runtime_error("oracle: matmul shape mismatch");
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(a.rows(), b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.cols(); ++j)
            for (Eigen::Index k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(k, j);
    return c;
}

inline Eigen::VectorXd naive_matvec(const Eigen::MatrixXd& a, const Eigen::VectorXd& x) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(a.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index k = 0; k < a.cols(); ++k) y[i] += a(i, k) * x[k];
    return y;
}

inline double relative_diff(double a, double b, double floor = 1e-12) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller; identical streams across standard libraries.
inline double gaussian(std::mt19937_64& rng) {
    double u1 = unit_uniform(rng);
    while (u1 <= 1e-300) u1 = unit_uniform(rng);
    const double u2 = unit_uniform(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = gaussian(rng);
    return m;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = gaussian(rng);
    return v;
}

// Random SPD matrix A A^T + eps I.
inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n, double eps = 0.1) {
    const Eigen::MatrixXd a = random_matrix(rng, n, n);
    return naive_matmul(a, a.transpose()) + eps * Eigen::MatrixXd::Identity(n, n);
}

// Gram-Schmidt orthonormal columns.
inline Eigen::MatrixXd random_orthonormal(std::mt19937_64& rng, int rows, int cols) {
    Eigen::MatrixXd q = random_matrix(rng, rows, cols);
    for (int c = 0; c < cols; ++c) {
        for (int p = 0; p < c; ++p) q.col(c) -= q.col(p).dot(q.col(c)) * q.col(p);
        q.col(c) /= q.col(c).norm();
    }
    return q;
}

} // namespace oracles
