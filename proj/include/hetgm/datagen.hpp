#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hetgm/graph.hpp"
#include "hetgm/rng.hpp"

namespace hetgm {

/// One simulated dataset: observations, network, generator-level latent
/// positions (timestamps for the chain designs) and the ground-truth edge
/// sets. Generators are pure functions of (n, d, seed).
struct Dataset {
    std::string example;
    Eigen::MatrixXd x;          // n x d
    Eigen::MatrixXd adjacency;  // n x n in {0,1}, zero diagonal
    Eigen::MatrixXd b_true;     // n x m
    EdgeSetCollection truth;
    Eigen::MatrixXd precision;  // shared precision matrix where one exists (Gaussian design)
    std::uint64_t seed = 0;
    std::map<std::string, double> params;
};

/// Independent Bernoulli(p_ij) draws for i < j, mirrored, zero diagonal.
Eigen::MatrixXd sample_adjacency(const Eigen::MatrixXd& p, std::uint64_t seed);

/// Gaussian data over a random dot product graph: heterogeneous means built
/// from the leading eigenvectors of the sampled network, one shared sparse
/// precision matrix, so every node carries the same edge set.
Dataset gen_example1(int n, int d, std::uint64_t seed, int latent_dim = 3);

/// Dynamic butterfly pairs over a chain network: piecewise-constant active
/// supports on five equal time sub-intervals, adjacent supports sharing 40%
/// of their indices.
Dataset gen_example2(int n, int d, std::uint64_t seed);

/// Chain Laplacian data over a permutation network: node i's variables form a
/// Hamiltonian path in the order of permutation sigma_i, consecutive
/// permutations differ by one adjacent transposition. Edge probabilities are
/// the scaled Kendall tau DISTANCE (the literal model); `similarity_network`
/// switches to 1 - distance.
Dataset gen_example3(int n, int d, std::uint64_t seed, bool similarity_network = false);

/// Number of discordant pairs between two permutations of [d].
int kendall_tau(const std::vector<int>& perm_a, const std::vector<int>& perm_b);

/// kendall_tau divided by d(d-1)/2, in [0, 1].
double scaled_kendall_tau(const std::vector<int>& perm_a, const std::vector<int>& perm_b);

/// One draw of a butterfly pair: x1 ~ N(0,1) and x2 = b*x1 + (1-b)*z with a
/// single shared b ~ Bernoulli(p), z ~ N(0,1). The pair's correlation is p.
std::pair<double, double> butterfly_pair(Rng& rng, double p);

/// Cross-field checks shared by the generators and the test-suite: shapes
/// agree, adjacency is symmetric {0,1} with zero diagonal, truth is canonical.
void validate_dataset(const Dataset& ds);

}  // namespace hetgm
