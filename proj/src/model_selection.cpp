#include "hetgm/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "hetgm/errors.hpp"
#include "hetgm/parallel.hpp"
#include "hetgm/rng.hpp"
#include "hetgm/score_fit.hpp"

namespace hetgm {

CvPlan kfold_split(int n, int k, std::uint64_t seed) {
    if (k < 2 || k > n) throw std::invalid_argument("kfold_split: need 2 <= k <= n");
    CvPlan plan;
    plan.fold_count = k;
    plan.seed = seed;
    plan.labels.resize(static_cast<std::size_t>(n));
    const std::vector<int> order = Rng(seed).permutation(n);
    for (int i = 0; i < n; ++i) {
        plan.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i % k + 1;
    }
    return plan;
}

namespace {

struct FoldView {
    Eigen::MatrixXd x_train, b_train, x_test, b_test;
};

FoldView split_fold(const Eigen::MatrixXd& x, const Eigen::MatrixXd& b,
                    const std::vector<int>& labels, int fold) {
    const auto n = x.rows();
    Eigen::Index n_test = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (labels[static_cast<std::size_t>(i)] == fold) ++n_test;
    }
    FoldView v;
    v.x_train.resize(n - n_test, x.cols());
    v.b_train.resize(n - n_test, b.cols());
    v.x_test.resize(n_test, x.cols());
    v.b_test.resize(n_test, b.cols());
    Eigen::Index it = 0, ih = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (labels[static_cast<std::size_t>(i)] == fold) {
            v.x_test.row(ih) = x.row(i);
            v.b_test.row(ih) = b.row(i);
            ++ih;
        } else {
            v.x_train.row(it) = x.row(i);
            v.b_train.row(it) = b.row(i);
            ++it;
        }
    }
    return v;
}

}  // namespace

LambdaCvResult cv_lambda(const Eigen::MatrixXd& x, const Eigen::MatrixXd& b_hat,
                         const KernelConfig& kernel, std::vector<double> lambda_grid,
                         const CvPlan& plan, int threads) {
    if (lambda_grid.empty()) throw std::invalid_argument("cv_lambda: empty grid");
    for (double l : lambda_grid) {
        if (!(l > 0.0) || !std::isfinite(l)) {
            throw std::invalid_argument("cv_lambda: grid values must be positive and finite");
        }
    }
    if (static_cast<Eigen::Index>(plan.labels.size()) != x.rows()) {
        throw std::invalid_argument("cv_lambda: plan does not match data");
    }
    std::sort(lambda_grid.begin(), lambda_grid.end());
    lambda_grid.erase(std::unique(lambda_grid.begin(), lambda_grid.end()), lambda_grid.end());

    std::vector<FoldView> folds;
    folds.reserve(static_cast<std::size_t>(plan.fold_count));
    for (int f = 1; f <= plan.fold_count; ++f) {
        folds.push_back(split_fold(x, b_hat, plan.labels, f));
        if (folds.back().x_train.rows() < 2) {
            throw std::invalid_argument("cv_lambda: a fold complement has fewer than 2 points");
        }
    }

    LambdaCvResult result;
    result.grid = lambda_grid;
    const auto n_lambda = lambda_grid.size();
    const auto n_fold = static_cast<std::size_t>(plan.fold_count);
    std::vector<double> cell(n_lambda * n_fold);
    parallel_for(static_cast<std::int64_t>(cell.size()), threads, [&](std::int64_t i) {
        const auto li = static_cast<std::size_t>(i) / n_fold;
        const auto fi = static_cast<std::size_t>(i) % n_fold;
        FitConfig cfg;
        cfg.lambda = lambda_grid[li];
        cfg.kernel = kernel;
        const RepresenterModel model = fit(folds[fi].x_train, folds[fi].b_train, cfg);
        cell[static_cast<std::size_t>(i)] =
            empirical_loss(model, folds[fi].x_test, folds[fi].b_test);
    });

    result.mean_loss.resize(n_lambda);
    std::size_t best = 0;
    for (std::size_t li = 0; li < n_lambda; ++li) {
        double sum = 0.0;
        for (std::size_t fi = 0; fi < n_fold; ++fi) {
            const double loss = cell[li * n_fold + fi];
            result.table.emplace_back(lambda_grid[li], static_cast<int>(fi) + 1, loss);
            sum += loss;
        }
        result.mean_loss[li] = sum / static_cast<double>(n_fold);
        if (result.mean_loss[li] <= result.mean_loss[best]) best = li;
    }
    result.best_lambda = lambda_grid[best];
    return result;
}

namespace {

// Mean F1 of two independent uniformly random edge sets of these sizes; the
// observed agreement is scored against it so that trivially dense thresholds
// cannot win on set size alone.
double chance_f1(std::size_t size_a, std::size_t size_b, std::size_t total) {
    const double expected_common =
        static_cast<double>(size_a) * static_cast<double>(size_b) / static_cast<double>(total);
    return 2.0 * expected_common / static_cast<double>(size_a + size_b);
}

double corrected_agreement(const std::vector<std::pair<int, int>>& a,
                           const std::vector<std::pair<int, int>>& b, std::size_t total) {
    std::size_t common = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia == *ib) {
            ++common;
            ++ia;
            ++ib;
        } else if (*ia < *ib) {
            ++ia;
        } else {
            ++ib;
        }
    }
    const double f1 =
        2.0 * static_cast<double>(common) / static_cast<double>(a.size() + b.size());
    const double expected = chance_f1(a.size(), b.size(), total);
    return (f1 - expected) / (1.0 - expected);
}

// Below this consensus level the folds show no stable structure and the
// sparsest candidate wins; above it, the smallest threshold in the half-max
// band is taken, since the stable region's sparse tail consistently drops
// weak edges in every fold and would otherwise be preferred.
constexpr double kConsensusFloor = 0.1;
constexpr double kBandFraction = 0.5;

}  // namespace

DeltaCvResult cv_delta(const std::vector<OmegaField>& fields_by_fold,
                       std::vector<double> delta_grid) {
    if (fields_by_fold.size() < 2) throw std::invalid_argument("cv_delta: need at least 2 folds");
    if (delta_grid.empty()) throw std::invalid_argument("cv_delta: empty grid");
    const int nodes = fields_by_fold.front().node_count();
    const int dim = fields_by_fold.front().dim;
    for (const auto& f : fields_by_fold) {
        if (f.node_count() != nodes || f.dim != dim) {
            throw std::invalid_argument("cv_delta: folds cover different nodes");
        }
    }
    std::sort(delta_grid.begin(), delta_grid.end());
    delta_grid.erase(std::unique(delta_grid.begin(), delta_grid.end()), delta_grid.end());

    const std::size_t complete = static_cast<std::size_t>(dim) * (dim - 1) / 2;
    DeltaCvResult result;
    result.grid = delta_grid;
    result.stability.assign(delta_grid.size(), -1.0);

    for (std::size_t gi = 0; gi < delta_grid.size(); ++gi) {
        std::vector<EdgeSetCollection> sets;
        sets.reserve(fields_by_fold.size());
        for (const auto& f : fields_by_fold) sets.push_back(threshold_edges(f, delta_grid[gi]));

        // Node terms where both folds are empty (or both complete) carry no
        // information; thresholds with no informative term anywhere are
        // degenerate and stay at -1.
        double sum = 0.0;
        std::size_t terms = 0;
        for (std::size_t f = 0; f < sets.size(); ++f) {
            for (std::size_t g = f + 1; g < sets.size(); ++g) {
                for (int node = 0; node < nodes; ++node) {
                    const auto& ef = sets[f].edges[static_cast<std::size_t>(node)];
                    const auto& eg = sets[g].edges[static_cast<std::size_t>(node)];
                    if (ef.empty() && eg.empty()) continue;
                    if (ef.size() == complete && eg.size() == complete) continue;
                    sum += corrected_agreement(ef, eg, complete);
                    ++terms;
                }
            }
        }
        if (terms == 0) continue;
        result.stability[gi] = sum / static_cast<double>(terms);
    }

    std::ptrdiff_t max_at = -1;
    for (std::size_t gi = 0; gi < delta_grid.size(); ++gi) {
        if (result.stability[gi] == -1.0) continue;
        if (max_at < 0 || result.stability[gi] >= result.stability[static_cast<std::size_t>(max_at)]) {
            max_at = static_cast<std::ptrdiff_t>(gi);
        }
    }
    if (max_at < 0) {
        throw SelectionError(
            "cv_delta: every grid value is degenerate (all-empty or all-complete); widen the grid");
    }
    const double max_score = result.stability[static_cast<std::size_t>(max_at)];
    if (max_score < kConsensusFloor) {
        // no consensus anywhere: the sparsest candidate is the conservative pick
        for (std::size_t gi = delta_grid.size(); gi-- > 0;) {
            if (result.stability[gi] != -1.0) {
                result.best_delta = delta_grid[gi];
                return result;
            }
        }
    }
    for (std::size_t gi = 0; gi < delta_grid.size(); ++gi) {
        if (result.stability[gi] == -1.0) continue;
        if (result.stability[gi] >= kBandFraction * max_score) {
            result.best_delta = delta_grid[gi];
            return result;
        }
    }
    result.best_delta = delta_grid[static_cast<std::size_t>(max_at)];
    return result;
}

}  // namespace hetgm
