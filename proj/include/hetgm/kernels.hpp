#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace hetgm {

/// Inverse-bandwidth parameters of the two Gaussian kernels: sigma_x acts on
/// the data space, sigma_b on the embedding space. Both enter as
/// exp(-sigma^2 * squared distance).
struct KernelConfig {
    double sigma_x = 1.0;
    double sigma_b = 1.0;

    void validate() const;
};

/// 1 / median of the Euclidean distances over all unordered distinct pairs of
/// rows. The median of an even-length list is the mean of the two central
/// values. For more than 5000 rows the median is taken over a seeded uniform
/// subsample of 1e6 pairs instead of the full O(n^2) set.
double median_heuristic(const Eigen::MatrixXd& points, std::uint64_t seed = 0);

double gaussian_kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& x_prime, double sigma);

/// Gram matrix of the rows of `points`: G(i,j) = exp(-sigma^2 |p_i - p_j|^2).
Eigen::MatrixXd gram(const Eigen::MatrixXd& points, double sigma);

/// Rectangular Gram between the rows of `a` (rows of the result) and `b`.
Eigen::MatrixXd gram_cross(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double sigma);

/// Partial derivative of the Gaussian kernel with respect to coordinate j of
/// its SECOND argument:
///   d/dx'_j exp(-sigma^2 |x - x'|^2) = 2 sigma^2 (x_j - x'_j) k(x, x').
/// Every derivative in this library differentiates the second (anchor)
/// argument unless stated otherwise; compositions elsewhere rely on it.
double grad2_k1(const Eigen::Ref<const Eigen::VectorXd>& x,
                const Eigen::Ref<const Eigen::VectorXd>& x_prime, double sigma, int j);

/// Mixed second derivative d/dx_j d/dx'_l of the Gaussian kernel:
///   [2 sigma^2 1{j=l} - 4 sigma^4 (x_j - x'_j)(x_l - x'_l)] k(x, x').
double hess12_k1(const Eigen::Ref<const Eigen::VectorXd>& x,
                 const Eigen::Ref<const Eigen::VectorXd>& x_prime, double sigma, int j, int l);

}  // namespace hetgm
