#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace hetgm {

/// Adjacency spectral embedding: the m leading positive eigenpairs of a
/// symmetric matrix, returned as U_m * Lambda_m^(1/2) with eigenvalues in
/// decreasing order. Each eigenvector's sign is fixed so that its entry of
/// largest magnitude (first such index on ties) is positive.
Eigen::MatrixXd ase(const Eigen::MatrixXd& adjacency, int dim);

/// Index (1-based) of the largest consecutive gap in a descending list of
/// positive eigenvalues; first index wins ties.
int dominant_gap(const std::vector<double>& eigenvalues);

/// Elbow rule over the top-`max_dim` positive eigenvalues of `adjacency`.
int choose_dim(const Eigen::MatrixXd& adjacency, int max_dim);

/// argmin over orthogonal Q of |B_hat Q - B_ref|_F, the polar factor of
/// B_hat^T B_ref.
Eigen::MatrixXd procrustes_align(const Eigen::MatrixXd& b_hat, const Eigen::MatrixXd& b_ref);

/// Reads an undirected edge list: one "i j" pair of 0-based node indices per
/// line, whitespace-separated, '#' lines ignored. Symmetry is enforced. The
/// node count is max(index)+1 or `n_hint`, whichever is larger.
Eigen::MatrixXd load_edge_list(const std::string& path, int n_hint = 0);

void save_edge_list(const Eigen::MatrixXd& adjacency, const std::string& path);

}  // namespace hetgm
