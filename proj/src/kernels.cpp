#include "hetgm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetgm/errors.hpp"
#include "hetgm/rng.hpp"

namespace hetgm {

namespace {

void require_finite(const Eigen::MatrixXd& points, const char* who) {
    if (!points.allFinite()) {
        throw std::invalid_argument(std::string(who) + ": non-finite coordinates");
    }
}

void require_sigma(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument("sigma must be positive and finite");
    }
}

double median_of_squared(std::vector<double>& sq) {
    const std::size_t k = sq.size();
    const std::size_t mid = k / 2;
    std::nth_element(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(mid), sq.end());
    const double hi = sq[mid];
    if (k % 2 == 1) return std::sqrt(hi);
    const double lo = *std::max_element(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (std::sqrt(lo) + std::sqrt(hi));
}

}  // namespace

void KernelConfig::validate() const {
    if (!(sigma_x > 0.0) || !std::isfinite(sigma_x) || !(sigma_b > 0.0) || !std::isfinite(sigma_b)) {
        throw std::invalid_argument("KernelConfig: bandwidth parameters must be positive and finite");
    }
}

double median_heuristic(const Eigen::MatrixXd& points, std::uint64_t seed) {
    const Eigen::Index n = points.rows();
    if (n < 2) throw std::invalid_argument("median_heuristic: needs at least 2 points");
    require_finite(points, "median_heuristic");

    std::vector<double> sq;
    if (n <= 5000) {
        sq.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) {
                sq.push_back((points.row(i) - points.row(j)).squaredNorm());
            }
        }
    } else {
        constexpr std::size_t kPairs = 1000000;
        Rng rng(seed);
        sq.reserve(kPairs);
        while (sq.size() < kPairs) {
            const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
            const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
            if (i == j) continue;
            sq.push_back((points.row(i) - points.row(j)).squaredNorm());
        }
    }

    const double med = median_of_squared(sq);
    if (!(med > 0.0)) {
        throw DegenerateDataError("median_heuristic: median pairwise distance is zero");
    }
    return 1.0 / med;
}

double gaussian_kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& x_prime, double sigma) {
    require_sigma(sigma);
    if (x.size() != x_prime.size()) {
        throw std::invalid_argument("gaussian_kernel: dimension mismatch");
    }
    return std::exp(-sigma * sigma * (x - x_prime).squaredNorm());
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& points, double sigma) {
    require_sigma(sigma);
    require_finite(points, "gram");
    const Eigen::Index n = points.rows();
    const double s2 = sigma * sigma;
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        g(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = std::exp(-s2 * (points.row(i) - points.row(j)).squaredNorm());
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

Eigen::MatrixXd gram_cross(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double sigma) {
    require_sigma(sigma);
    require_finite(a, "gram_cross");
    require_finite(b, "gram_cross");
    if (a.cols() != b.cols()) throw std::invalid_argument("gram_cross: dimension mismatch");
    const double s2 = sigma * sigma;
    Eigen::MatrixXd g(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.rows(); ++j) {
            g(i, j) = std::exp(-s2 * (a.row(i) - b.row(j)).squaredNorm());
        }
    }
    return g;
}

double grad2_k1(const Eigen::Ref<const Eigen::VectorXd>& x,
                const Eigen::Ref<const Eigen::VectorXd>& x_prime, double sigma, int j) {
    if (j < 0 || j >= x.size()) throw std::invalid_argument("grad2_k1: index out of range");
    const double k = gaussian_kernel(x, x_prime, sigma);
    return 2.0 * sigma * sigma * (x(j) - x_prime(j)) * k;
}

double hess12_k1(const Eigen::Ref<const Eigen::VectorXd>& x,
                 const Eigen::Ref<const Eigen::VectorXd>& x_prime, double sigma, int j, int l) {
    if (j < 0 || j >= x.size() || l < 0 || l >= x.size()) {
        throw std::invalid_argument("hess12_k1: index out of range");
    }
    const double k = gaussian_kernel(x, x_prime, sigma);
    const double s2 = sigma * sigma;
    const double same = (j == l) ? 2.0 * s2 : 0.0;
    return (same - 4.0 * s2 * s2 * (x(j) - x_prime(j)) * (x(l) - x_prime(l))) * k;
}

}  // namespace hetgm
