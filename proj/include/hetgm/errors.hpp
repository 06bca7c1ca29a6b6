#pragma once

#include <stdexcept>
#include <string>

namespace hetgm {

/// All observations coincide, no usable pairwise scale.
struct DegenerateDataError : std::runtime_error {
    explicit DegenerateDataError(const std::string& what) : std::runtime_error(what) {}
};

/// Requested embedding dimension exceeds the number of positive eigenvalues.
struct RankDeficiencyError : std::runtime_error {
    explicit RankDeficiencyError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure in a linear solve.
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

/// Model selection could not pick a value (e.g. every grid point degenerate).
struct SelectionError : std::runtime_error {
    explicit SelectionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hetgm
