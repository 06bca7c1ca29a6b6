#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <utility>
#include <vector>

#include "hetgm/rng.hpp"

namespace hetgm::testing {

inline Eigen::MatrixXd random_matrix(int n, int d, Rng& rng) {
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
    }
    return x;
}

/// Sparse precision matrix with unit diagonal: 0.3/c on the edges of a seeded
/// Erdos-Renyi support, c chosen to keep it positive definite.
struct SparsePrecision {
    Eigen::MatrixXd precision;
    std::vector<std::pair<int, int>> support;  // canonical j < l
};

inline SparsePrecision sparse_precision(int d, double edge_prob, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
    SparsePrecision out;
    for (int j = 0; j < d; ++j) {
        for (int l = j + 1; l < d; ++l) {
            if (rng.uniform() < edge_prob) {
                s(j, l) = s(l, j) = 1.0;
                out.support.emplace_back(j, l);
            }
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
    const double shift = 0.3 * std::abs(eig.eigenvalues().minCoeff()) + 0.1;
    out.precision = (0.3 / shift) * s;
    out.precision.diagonal().array() += 1.0;
    return out;
}

/// n draws from N(0, precision^-1).
inline Eigen::MatrixXd sample_gaussian(const Eigen::MatrixXd& precision, int n, Rng& rng) {
    const int d = int(precision.rows());
    const Eigen::MatrixXd cov =
        Eigen::LLT<Eigen::MatrixXd>(precision).solve(Eigen::MatrixXd::Identity(d, d));
    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(0.5 * (cov + cov.transpose())).matrixL();
    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd z(d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) z(j) = rng.normal();
        x.row(i) = (chol * z).transpose();
    }
    return x;
}

/// Mann-Whitney AUC of positive scores against negative scores.
inline double auc(const std::vector<double>& positives, const std::vector<double>& negatives) {
    double wins = 0.0;
    for (double p : positives) {
        for (double q : negatives) {
            if (p > q) wins += 1.0;
            else if (p == q) wins += 0.5;
        }
    }
    return wins / (double(positives.size()) * double(negatives.size()));
}

}  // namespace hetgm::testing
