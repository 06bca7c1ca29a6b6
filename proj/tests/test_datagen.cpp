#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

#include "hetgm/datagen.hpp"
#include "hetgm/rng.hpp"

using namespace hetgm;

namespace {

// Direct definition: a pair of values is discordant when its order differs.
int kendall_oracle(const std::vector<int>& a, const std::vector<int>& b) {
    const int d = int(a.size());
    std::vector<int> pa(d), pb(d);
    for (int i = 0; i < d; ++i) {
        pa[a[i]] = i;
        pb[b[i]] = i;
    }
    int count = 0;
    for (int u = 0; u < d; ++u) {
        for (int v = u + 1; v < d; ++v) {
            if ((pa[u] < pa[v]) != (pb[u] < pb[v])) ++count;
        }
    }
    return count;
}

std::vector<std::pair<int, int>> chain_edges(const std::vector<int>& sigma) {
    std::vector<std::pair<int, int>> out;
    for (std::size_t k = 0; k + 1 < sigma.size(); ++k) {
        out.emplace_back(std::min(sigma[k], sigma[k + 1]), std::max(sigma[k], sigma[k + 1]));
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool is_hamiltonian_path(const std::vector<std::pair<int, int>>& edges, int d) {
    if (int(edges.size()) != d - 1) return false;
    std::vector<int> degree(d, 0);
    for (auto [j, l] : edges) {
        ++degree[j];
        ++degree[l];
    }
    int leaves = 0;
    for (int v = 0; v < d; ++v) {
        if (degree[v] == 0 || degree[v] > 2) return false;
        if (degree[v] == 1) ++leaves;
    }
    // connected: d-1 edges, max degree 2 and exactly two endpoints
    return leaves == 2;
}

}  // namespace

TEST_CASE("sample_adjacency boundary probabilities") {
    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(6, 6);
    CHECK(sample_adjacency(zero, 1).cwiseAbs().maxCoeff() == 0.0);

    Eigen::MatrixXd one = Eigen::MatrixXd::Ones(6, 6);
    one.diagonal().setZero();
    const Eigen::MatrixXd complete = sample_adjacency(one, 1);
    CHECK(complete.sum() == 30.0);
    CHECK(complete.diagonal().cwiseAbs().maxCoeff() == 0.0);

    Eigen::MatrixXd bad = zero;
    bad(0, 1) = 1.5;
    CHECK_THROWS_AS(sample_adjacency(bad, 1), std::invalid_argument);
}

TEST_CASE("sample_adjacency edge count matches the binomial moments") {
    const int n = 200;
    Eigen::MatrixXd p = Eigen::MatrixXd::Constant(n, n, 0.3);
    p.diagonal().setZero();
    const Eigen::MatrixXd a = sample_adjacency(p, 2024);
    CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const double pairs = n * (n - 1) / 2.0;
    const double edges = a.sum() / 2.0;
    const double sd = std::sqrt(pairs * 0.3 * 0.7);
    CHECK(std::abs(edges - 0.3 * pairs) <= 4.0 * sd);
}

TEST_CASE("gaussian design shares one sparse graph across all nodes") {
    const Dataset ds = gen_example1(60, 12, 7);
    validate_dataset(ds);
    for (int i = 1; i < ds.truth.node_count; ++i) {
        CHECK(ds.truth.edges[i] == ds.truth.edges[0]);
    }
    // unit diagonal is exact, and the support of the precision matrix is the truth
    for (int j = 0; j < 12; ++j) CHECK(ds.precision(j, j) == 1.0);
    std::vector<std::pair<int, int>> support;
    for (int j = 0; j < 12; ++j) {
        for (int l = j + 1; l < 12; ++l) {
            if (ds.precision(j, l) != 0.0) support.emplace_back(j, l);
        }
    }
    CHECK(support == ds.truth.edges[0]);
    CHECK(Eigen::LLT<Eigen::MatrixXd>(ds.precision).info() == Eigen::Success);
    CHECK(ds.b_true.cols() == 3);
}

TEST_CASE("gaussian design truth edge count is near its expectation at d=100") {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        total += double(gen_example1(50, 100, seed).truth.edges[0].size());
    }
    const double mean = total / 50.0;  // expectation 0.01 * C(100,2) = 49.5
    INFO("mean truth edges " << mean);
    CHECK(mean >= 30.0);
    CHECK(mean <= 70.0);
}

TEST_CASE("generators are pure functions of (n, d, seed)") {
    const Dataset a1 = gen_example1(40, 8, 11), a2 = gen_example1(40, 8, 11);
    CHECK((a1.x - a2.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a1.adjacency - a2.adjacency).cwiseAbs().maxCoeff() == 0.0);
    const Dataset b1 = gen_example2(40, 8, 11), b2 = gen_example2(40, 8, 11);
    CHECK((b1.x - b2.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK(b1.truth.edges == b2.truth.edges);
    const Dataset c1 = gen_example3(40, 8, 11), c2 = gen_example3(40, 8, 11);
    CHECK((c1.x - c2.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((c1.adjacency - c2.adjacency).cwiseAbs().maxCoeff() == 0.0);

    const Dataset other = gen_example2(40, 8, 12);
    CHECK((b1.x - other.x).cwiseAbs().maxCoeff() != 0.0);
}

TEST_CASE("butterfly design truth structure") {
    const int n = 100, d = 10;
    const Dataset ds = gen_example2(n, d, 5);
    validate_dataset(ds);
    CHECK_THROWS_AS(gen_example2(100, 9, 5), std::invalid_argument);

    for (int i = 0; i < n; ++i) {
        CHECK(ds.truth.edges[i].size() == 3);  // ceil(0.6 * 5) active pairs
        for (auto [j, l] : ds.truth.edges[i]) {
            CHECK(l == j + 1);
            CHECK(j % 2 == 0);
        }
        CHECK(ds.b_true(i, 0) == double(i) / n);
    }

    // supports change only at the four interior sub-interval boundaries
    int changes = 0;
    for (int i = 1; i < n; ++i) {
        if (ds.truth.edges[i] != ds.truth.edges[i - 1]) {
            ++changes;
            CHECK(i % (n / 5) == 0);
        }
    }
    CHECK(changes <= 4);

    // adjacent sub-intervals share ceil(0.4 * 3) = 2 active pairs
    for (int r = 0; r + 1 < 5; ++r) {
        const auto& cur = ds.truth.edges[r * (n / 5)];
        const auto& next = ds.truth.edges[(r + 1) * (n / 5)];
        std::vector<std::pair<int, int>> common;
        std::set_intersection(cur.begin(), cur.end(), next.begin(), next.end(),
                              std::back_inserter(common));
        CHECK(common.size() == 2);
    }

    // chain network
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            CHECK(ds.adjacency(i, j) == (std::abs(i - j) == 1 ? 1.0 : 0.0));
        }
    }
}

TEST_CASE("butterfly pair correlation equals the activation probability") {
    Rng rng(1234);
    const int n = 2000;
    const double p = 0.8;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const auto [x1, x2] = butterfly_pair(rng, p);
        sx += x1;
        sy += x2;
        sxx += x1 * x1;
        syy += x2 * x2;
        sxy += x1 * x2;
    }
    const double corr = (sxy / n - sx / n * sy / n) /
                        std::sqrt((sxx / n - sx / n * sx / n) * (syy / n - sy / n * sy / n));
    CHECK(std::abs(corr - p) <= 0.05);
}

TEST_CASE("kendall tau distances") {
    CHECK(kendall_tau({0, 1, 2, 3}, {0, 1, 2, 3}) == 0);
    CHECK(kendall_tau({0, 1, 2, 3}, {3, 2, 1, 0}) == 6);
    CHECK(scaled_kendall_tau({0, 1, 2}, {1, 0, 2}) == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(kendall_tau({0, 1}, {0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(kendall_tau({0, 1}, {0, 1, 2}), std::invalid_argument);

    Rng rng(55);
    for (int trial = 0; trial < 50; ++trial) {
        const int d = 2 + int(rng.below(5));
        const std::vector<int> a = rng.permutation(d);
        const std::vector<int> b = rng.permutation(d);
        CHECK(kendall_tau(a, b) == kendall_oracle(a, b));
    }
}

TEST_CASE("permutation design truth is a Hamiltonian path that drifts slowly") {
    const Dataset ds = gen_example3(60, 7, 13);
    validate_dataset(ds);
    for (int i = 0; i < 60; ++i) {
        CHECK(is_hamiltonian_path(ds.truth.edges[i], 7));
        if (i > 0) {
            std::vector<std::pair<int, int>> gone, added;
            std::set_difference(ds.truth.edges[i - 1].begin(), ds.truth.edges[i - 1].end(),
                                ds.truth.edges[i].begin(), ds.truth.edges[i].end(),
                                std::back_inserter(gone));
            std::set_difference(ds.truth.edges[i].begin(), ds.truth.edges[i].end(),
                                ds.truth.edges[i - 1].begin(), ds.truth.edges[i - 1].end(),
                                std::back_inserter(added));
            CHECK(gone.size() <= 2);
            CHECK(added.size() <= 2);
        }
    }
}

TEST_CASE("adjacent transpositions change at most two chain links (exhaustive d=4)") {
    std::vector<int> perm = {0, 1, 2, 3};
    std::sort(perm.begin(), perm.end());
    do {
        for (int k = 0; k + 1 < 4; ++k) {
            std::vector<int> swapped = perm;
            std::swap(swapped[k], swapped[k + 1]);
            const auto before = chain_edges(perm);
            const auto after = chain_edges(swapped);
            std::vector<std::pair<int, int>> gone;
            std::set_difference(before.begin(), before.end(), after.begin(), after.end(),
                                std::back_inserter(gone));
            CHECK(gone.size() <= 2);
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_CASE("permutation design network uses the scaled Kendall distance") {
    const Dataset literal = gen_example3(30, 6, 21, false);
    const Dataset similar = gen_example3(30, 6, 21, true);
    // same permutations (same seed), complementary connection probabilities:
    // the two adjacency draws use the same uniforms, so a literal edge between
    // near-identical permutations is rare while the similarity one is common.
    const double literal_degree = literal.adjacency.sum();
    const double similar_degree = similar.adjacency.sum();
    CHECK(literal_degree < similar_degree);

    // consecutive permutations differ by one adjacent swap: scaled distance
    // 1/15, so the chain neighbors are almost never linked in literal mode
    double chain_links = 0;
    for (int i = 0; i + 1 < 30; ++i) chain_links += literal.adjacency(i, i + 1);
    CHECK(chain_links <= 6.0);
}
