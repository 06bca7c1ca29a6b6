#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <tuple>
#include <vector>

#include "hetgm/graph.hpp"
#include "hetgm/kernels.hpp"

namespace hetgm {

/// Seeded partition of [0, n) into near-equal folds; labels run 1..fold_count
/// and sizes differ by at most one.
struct CvPlan {
    int fold_count = 5;
    std::vector<int> labels;
    std::uint64_t seed = 0;
};

CvPlan kfold_split(int n, int k, std::uint64_t seed);

struct LambdaCvResult {
    double best_lambda = 0.0;
    std::vector<double> grid;                             // sorted, deduplicated
    std::vector<double> mean_loss;                        // per grid value
    std::vector<std::tuple<double, int, double>> table;   // (lambda, fold, heldout_loss)
};

/// For each lambda, fits on every fold complement and scores the held-out
/// empirical score-matching loss; returns the minimizer, ties broken toward
/// larger lambda.
LambdaCvResult cv_lambda(const Eigen::MatrixXd& x, const Eigen::MatrixXd& b_hat,
                         const KernelConfig& kernel, std::vector<double> lambda_grid,
                         const CvPlan& plan, int threads = 1);

struct DeltaCvResult {
    double best_delta = 0.0;
    std::vector<double> grid;
    std::vector<double> stability;  // chance-corrected F1 agreement; -1 marks degenerate
};

/// Cross-fold edge-set stability. For each delta, thresholds every fold's
/// field and averages the pairwise F1 agreement over nodes and fold pairs,
/// corrected for the agreement two random sets of the same sizes would reach;
/// node terms where both folds are empty (or both complete) carry no
/// information and are skipped, and deltas with no informative term anywhere
/// are excluded (score -1). Identical non-degenerate fields score exactly 1.
///
/// Selection: when the best score shows no consensus (< 0.1) the sparsest
/// non-degenerate delta wins; otherwise the smallest delta scoring at least
/// half the maximum, since the stable region's sparse tail drops weak edges
/// consistently in every fold and would otherwise always be preferred.
/// Works best on fields fitted from disjoint folds, whose sampling noise
/// cannot agree by construction.
DeltaCvResult cv_delta(const std::vector<OmegaField>& fields_by_fold,
                       std::vector<double> delta_grid);

}  // namespace hetgm
