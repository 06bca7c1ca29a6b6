#include "hetgm/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "hetgm/embedding.hpp"

namespace hetgm {

Eigen::MatrixXd sample_adjacency(const Eigen::MatrixXd& p, std::uint64_t seed) {
    const auto n = p.rows();
    if (p.cols() != n) throw std::invalid_argument("sample_adjacency: matrix is not square");
    if (!p.allFinite() || p.minCoeff() < 0.0 || p.maxCoeff() > 1.0) {
        throw std::invalid_argument("sample_adjacency: entries must lie in [0, 1]");
    }
    Rng rng(seed);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (rng.bernoulli(p(i, j))) {
                a(i, j) = 1.0;
                a(j, i) = 1.0;
            }
        }
    }
    return a;
}

namespace {

Eigen::MatrixXd erdos_renyi(int d, double prob, std::uint64_t seed) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Constant(d, d, prob);
    p.diagonal().setZero();
    return sample_adjacency(p, seed);
}

std::vector<std::pair<int, int>> upper_pairs(const Eigen::MatrixXd& s) {
    std::vector<std::pair<int, int>> out;
    for (int j = 0; j < s.rows(); ++j) {
        for (int l = j + 1; l < s.cols(); ++l) {
            if (s(j, l) != 0.0) out.emplace_back(j, l);
        }
    }
    return out;
}

}  // namespace

Dataset gen_example1(int n, int d, std::uint64_t seed, int latent_dim) {
    if (n < 10 || d < 2 || latent_dim < 1) {
        throw std::invalid_argument("gen_example1: need n >= 10, d >= 2, latent_dim >= 1");
    }
    Dataset ds;
    ds.example = "rdpg-gaussian";
    ds.seed = seed;
    ds.params = {{"n", double(n)}, {"d", double(d)}, {"latent_dim", double(latent_dim)}};

    Rng latent(derive_seed(seed, "latent"));
    Eigen::MatrixXd b(n, latent_dim);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < latent_dim; ++j) b(i, j) = latent.uniform();
    }
    Eigen::MatrixXd p = b * b.transpose();
    p /= p.maxCoeff();
    p.diagonal().setZero();
    ds.adjacency = sample_adjacency(p, derive_seed(seed, "network"));
    ds.b_true = b;

    // Heterogeneous means: each column is one of the five leading eigenvectors
    // of the sampled network, scaled by sqrt(n) so entries are O(1).
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ds.adjacency);
    Rng mean_rng(derive_seed(seed, "means"));
    Eigen::MatrixXd mu(n, d);
    const int n_lead = 5;
    for (int c = 0; c < d; ++c) {
        const auto pick = static_cast<Eigen::Index>(mean_rng.below(n_lead));
        Eigen::VectorXd v = eig.eigenvectors().col(n - 1 - pick);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        mu.col(c) = std::sqrt(double(n)) * v;
    }

    const Eigen::MatrixXd s = erdos_renyi(d, 0.01, derive_seed(seed, "graph"));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> seig(s);
    const double shift = 0.3 * std::abs(seig.eigenvalues().minCoeff()) + 0.1;
    // b_scale makes the diagonal exactly one: S has a zero diagonal.
    Eigen::MatrixXd precision = (0.3 / shift) * s;
    precision.diagonal().array() += 1.0;
    Eigen::LLT<Eigen::MatrixXd> prec_llt(precision);
    if (prec_llt.info() != Eigen::Success) {
        throw std::logic_error("gen_example1: precision matrix not positive definite");
    }
    const Eigen::MatrixXd cov = prec_llt.solve(Eigen::MatrixXd::Identity(d, d));
    Eigen::LLT<Eigen::MatrixXd> cov_llt(0.5 * (cov + cov.transpose()));
    if (cov_llt.info() != Eigen::Success) {
        throw std::logic_error("gen_example1: covariance factorization failed");
    }
    const Eigen::MatrixXd chol = cov_llt.matrixL();

    Rng obs(derive_seed(seed, "observations"));
    ds.x.resize(n, d);
    Eigen::VectorXd zvec(d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) zvec(j) = obs.normal();
        ds.x.row(i) = mu.row(i) + (chol * zvec).transpose();
    }

    ds.truth.node_count = n;
    ds.truth.dim = d;
    ds.truth.edges.assign(static_cast<std::size_t>(n), upper_pairs(s));
    ds.precision = precision;
    validate_dataset(ds);
    return ds;
}

namespace {

// Active index sets for the five time sub-intervals: ceil(0.6 * d/2) pairs
// each, adjacent supports keep ceil(0.4 * q) of the previous one.
std::vector<std::vector<int>> butterfly_supports(int pairs, Rng& rng) {
    const int q = static_cast<int>(std::ceil(0.6 * pairs));
    std::vector<std::vector<int>> supports;
    supports.push_back(rng.sample_without_replacement(pairs, q));
    for (int r = 1; r < 5; ++r) {
        const auto& prev = supports.back();
        std::vector<int> inactive;
        for (int j = 0; j < pairs; ++j) {
            if (!std::binary_search(prev.begin(), prev.end(), j)) inactive.push_back(j);
        }
        int keep = static_cast<int>(std::ceil(0.4 * q));
        keep = std::max(keep, q - static_cast<int>(inactive.size()));
        std::vector<int> next;
        for (int kidx : rng.sample_without_replacement(q, keep)) {
            next.push_back(prev[static_cast<std::size_t>(kidx)]);
        }
        for (int fidx : rng.sample_without_replacement(static_cast<int>(inactive.size()), q - keep)) {
            next.push_back(inactive[static_cast<std::size_t>(fidx)]);
        }
        std::sort(next.begin(), next.end());
        supports.push_back(std::move(next));
    }
    return supports;
}

}  // namespace

std::pair<double, double> butterfly_pair(Rng& rng, double p) {
    const double x1 = rng.normal();
    const bool keep = rng.bernoulli(p);
    const double z = rng.normal();
    return {x1, keep ? x1 : z};
}

Dataset gen_example2(int n, int d, std::uint64_t seed) {
    if (d % 2 != 0) throw std::invalid_argument("gen_example2: d must be even");
    if (n < 10 || d < 2) throw std::invalid_argument("gen_example2: need n >= 10, d >= 2");
    Dataset ds;
    ds.example = "butterfly";
    ds.seed = seed;
    ds.params = {{"n", double(n)}, {"d", double(d)}};

    const int pairs = d / 2;
    Rng support_rng(derive_seed(seed, "supports"));
    const auto supports = butterfly_supports(pairs, support_rng);
    // One activation probability per (sub-interval, active pair), in [0.5, 1]
    // so active pairs stay detectable.
    std::vector<std::vector<double>> prob(5, std::vector<double>(static_cast<std::size_t>(pairs), 0.0));
    for (int r = 0; r < 5; ++r) {
        for (int j : supports[static_cast<std::size_t>(r)]) {
            prob[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)] =
                support_rng.uniform(0.5, 1.0);
        }
    }

    Rng obs(derive_seed(seed, "observations"));
    ds.x.resize(n, d);
    ds.b_true.resize(n, 1);
    ds.truth.node_count = n;
    ds.truth.dim = d;
    ds.truth.edges.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double t = double(i) / double(n);
        ds.b_true(i, 0) = t;
        const int r = std::min(static_cast<int>(5.0 * t), 4);
        for (int j = 0; j < pairs; ++j) {
            const double p = prob[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)];
            const auto [x1, x2] = butterfly_pair(obs, p);
            ds.x(i, 2 * j) = x1;
            ds.x(i, 2 * j + 1) = x2;
            if (p != 0.0) ds.truth.edges[static_cast<std::size_t>(i)].emplace_back(2 * j, 2 * j + 1);
        }
    }

    ds.adjacency = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) {
        ds.adjacency(i, i + 1) = 1.0;
        ds.adjacency(i + 1, i) = 1.0;
    }
    validate_dataset(ds);
    return ds;
}

namespace {

int kendall_tau_unchecked(const std::vector<int>& a, const std::vector<int>& b) {
    const int d = static_cast<int>(a.size());
    // position of each value in b
    std::vector<int> pos(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) pos[static_cast<std::size_t>(b[static_cast<std::size_t>(i)])] = i;
    int discordant = 0;
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            const int pi = pos[static_cast<std::size_t>(a[static_cast<std::size_t>(i)])];
            const int pj = pos[static_cast<std::size_t>(a[static_cast<std::size_t>(j)])];
            if (pi > pj) ++discordant;
        }
    }
    return discordant;
}

void require_permutation(const std::vector<int>& p, const char* who) {
    std::vector<bool> seen(p.size(), false);
    for (int v : p) {
        if (v < 0 || v >= static_cast<int>(p.size()) || seen[static_cast<std::size_t>(v)]) {
            throw std::invalid_argument(std::string(who) + ": input is not a permutation");
        }
        seen[static_cast<std::size_t>(v)] = true;
    }
}

}  // namespace

int kendall_tau(const std::vector<int>& perm_a, const std::vector<int>& perm_b) {
    if (perm_a.size() != perm_b.size() || perm_a.empty()) {
        throw std::invalid_argument("kendall_tau: permutations of different length");
    }
    require_permutation(perm_a, "kendall_tau");
    require_permutation(perm_b, "kendall_tau");
    return kendall_tau_unchecked(perm_a, perm_b);
}

double scaled_kendall_tau(const std::vector<int>& perm_a, const std::vector<int>& perm_b) {
    const auto d = static_cast<double>(perm_a.size());
    return static_cast<double>(kendall_tau(perm_a, perm_b)) / (d * (d - 1.0) / 2.0);
}

Dataset gen_example3(int n, int d, std::uint64_t seed, bool similarity_network) {
    if (n < 2 || d < 2) throw std::invalid_argument("gen_example3: need n >= 2, d >= 2");
    Dataset ds;
    ds.example = "permutation-laplace";
    ds.seed = seed;
    ds.params = {{"n", double(n)},
                 {"d", double(d)},
                 {"similarity_network", similarity_network ? 1.0 : 0.0}};

    Rng perm_rng(derive_seed(seed, "permutations"));
    std::vector<std::vector<int>> sigma;
    sigma.push_back(perm_rng.permutation(d));
    for (int i = 1; i < n; ++i) {
        std::vector<int> next = sigma.back();
        const auto k = static_cast<std::size_t>(perm_rng.below(static_cast<std::uint64_t>(d - 1)));
        std::swap(next[k], next[k + 1]);
        sigma.push_back(std::move(next));
    }

    Eigen::MatrixXd p(n, n);
    for (int i = 0; i < n; ++i) {
        p(i, i) = 0.0;
        for (int j = i + 1; j < n; ++j) {
            const double dist =
                static_cast<double>(kendall_tau_unchecked(sigma[static_cast<std::size_t>(i)],
                                                          sigma[static_cast<std::size_t>(j)])) /
                (double(d) * (d - 1.0) / 2.0);
            const double pij = similarity_network ? 1.0 - dist : dist;
            p(i, j) = pij;
            p(j, i) = pij;
        }
    }
    ds.adjacency = sample_adjacency(p, derive_seed(seed, "network"));

    Rng obs(derive_seed(seed, "observations"));
    ds.x.resize(n, d);
    ds.truth.node_count = n;
    ds.truth.dim = d;
    ds.truth.edges.resize(static_cast<std::size_t>(n));
    ds.b_true.resize(n, 1);
    for (int i = 0; i < n; ++i) {
        const auto& s = sigma[static_cast<std::size_t>(i)];
        ds.b_true(i, 0) = double(i) / double(n);
        ds.x(i, s[0]) = obs.laplace(0.0, 1.0);
        for (int k = 1; k < d; ++k) {
            ds.x(i, s[static_cast<std::size_t>(k)]) =
                obs.laplace(ds.x(i, s[static_cast<std::size_t>(k - 1)]), 1.0);
        }
        auto& edges = ds.truth.edges[static_cast<std::size_t>(i)];
        for (int k = 0; k + 1 < d; ++k) {
            const int a = s[static_cast<std::size_t>(k)];
            const int b = s[static_cast<std::size_t>(k + 1)];
            edges.emplace_back(std::min(a, b), std::max(a, b));
        }
        std::sort(edges.begin(), edges.end());
    }
    validate_dataset(ds);
    return ds;
}

void validate_dataset(const Dataset& ds) {
    const auto n = ds.x.rows();
    const int d = static_cast<int>(ds.x.cols());
    if (ds.adjacency.rows() != n || ds.adjacency.cols() != n || ds.b_true.rows() != n ||
        ds.truth.node_count != static_cast<int>(n) || ds.truth.dim != d) {
        throw std::logic_error("validate_dataset: inconsistent shapes");
    }
    if (!ds.x.allFinite() || !ds.b_true.allFinite()) {
        throw std::logic_error("validate_dataset: non-finite values");
    }
    if (ds.adjacency.diagonal().cwiseAbs().maxCoeff() != 0.0) {
        throw std::logic_error("validate_dataset: adjacency has a nonzero diagonal");
    }
    if ((ds.adjacency - ds.adjacency.transpose()).cwiseAbs().maxCoeff() != 0.0) {
        throw std::logic_error("validate_dataset: adjacency is not symmetric");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double v = ds.adjacency(i, j);
            if (v != 0.0 && v != 1.0) {
                throw std::logic_error("validate_dataset: adjacency entries must be 0/1");
            }
        }
    }
    for (const auto& edges : ds.truth.edges) {
        for (std::size_t k = 0; k < edges.size(); ++k) {
            const auto [j, l] = edges[k];
            if (j < 0 || l <= j || l >= d) throw std::logic_error("validate_dataset: bad edge");
            if (k > 0 && !(edges[k - 1] < edges[k])) {
                throw std::logic_error("validate_dataset: edges not sorted/unique");
            }
        }
    }
}

}  // namespace hetgm
