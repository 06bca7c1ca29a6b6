#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "hetgm/score_fit.hpp"

namespace hetgm {

/// Per-node signal-strength matrices. Entry (j,l) of matrices[i] averages the
/// squared (j,l) score partial over the evaluation points; every matrix is
/// symmetrized and nonnegative.
struct OmegaField {
    int dim = 0;
    std::vector<Eigen::MatrixXd> matrices;
    /// Pre-symmetrization fields, kept only on request (diagnostics).
    std::vector<Eigen::MatrixXd> unsymmetrized;

    int node_count() const { return static_cast<int>(matrices.size()); }
};

/// Per-node edge sets over variable pairs, stored canonically with j < l,
/// ascending, 0-based.
struct EdgeSetCollection {
    int node_count = 0;
    int dim = 0;
    std::vector<std::vector<std::pair<int, int>>> edges;
};

/// Signal-strength field of a fitted model: for each target embedding,
/// averages the entrywise square of the score partials over the model's
/// training points (or a seeded uniform subsample of them), then symmetrizes
/// by averaging with the transpose.
OmegaField omega(const RepresenterModel& model, const Eigen::MatrixXd& target_embeddings,
                 std::optional<int> eval_subsample = std::nullopt, std::uint64_t seed = 0,
                 int threads = 1, bool keep_unsymmetrized = false);

/// Reference path used by tests and stub models: same averaging and
/// symmetrization, partials supplied by a callback.
OmegaField omega_from_partials(
    const std::function<Eigen::MatrixXd(int eval_index, int target_index)>& partials,
    int eval_count, int target_count, int dim, bool keep_unsymmetrized = false);

/// Node i keeps pair (j,l), j < l, iff field.matrices[i](j,l) >= delta.
EdgeSetCollection threshold_edges(const OmegaField& field, double delta);

}  // namespace hetgm
