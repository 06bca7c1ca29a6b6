#include "hetgm/embedding.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "hetgm/errors.hpp"

namespace hetgm {

namespace {

void require_symmetric(const Eigen::MatrixXd& a, const char* who) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument(std::string(who) + ": matrix is not square");
    }
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw std::invalid_argument(std::string(who) + ": matrix is not symmetric");
    }
}

// Eigenvalues descending with matching eigenvectors, positive part only.
struct PositiveSpectrum {
    std::vector<double> values;
    Eigen::MatrixXd vectors;  // one column per value
};

PositiveSpectrum positive_spectrum(const Eigen::MatrixXd& a, const char* who) {
    require_symmetric(a, who);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success) {
        throw SolverError(std::string(who) + ": eigendecomposition failed");
    }
    const auto& vals = solver.eigenvalues();  // ascending
    const Eigen::Index n = a.rows();
    const double tol = 1e-12 * std::max(1.0, std::abs(vals(n - 1)));
    PositiveSpectrum out;
    for (Eigen::Index i = n - 1; i >= 0 && vals(i) > tol; --i) {
        out.values.push_back(vals(i));
    }
    const auto k = static_cast<Eigen::Index>(out.values.size());
    out.vectors.resize(n, k);
    for (Eigen::Index c = 0; c < k; ++c) {
        out.vectors.col(c) = solver.eigenvectors().col(n - 1 - c);
    }
    return out;
}

void fix_signs(Eigen::MatrixXd& vectors) {
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
            const double mag = std::abs(vectors(r, c));
            if (mag > best) {
                best = mag;
                arg = r;
            }
        }
        if (vectors(arg, c) < 0.0) vectors.col(c) = -vectors.col(c);
    }
}

}  // namespace

Eigen::MatrixXd ase(const Eigen::MatrixXd& adjacency, int dim) {
    if (dim < 1) throw std::invalid_argument("ase: dim must be >= 1");
    PositiveSpectrum spec = positive_spectrum(adjacency, "ase");
    if (static_cast<int>(spec.values.size()) < dim) {
        throw RankDeficiencyError("ase: only " + std::to_string(spec.values.size()) +
                                  " positive eigenvalues, need " + std::to_string(dim));
    }
    Eigen::MatrixXd vectors = spec.vectors.leftCols(dim);
    fix_signs(vectors);
    Eigen::MatrixXd embedding(adjacency.rows(), dim);
    for (int c = 0; c < dim; ++c) {
        embedding.col(c) = vectors.col(c) * std::sqrt(spec.values[static_cast<std::size_t>(c)]);
    }
    return embedding;
}

int dominant_gap(const std::vector<double>& eigenvalues) {
    if (eigenvalues.empty()) throw std::invalid_argument("dominant_gap: empty spectrum");
    if (eigenvalues.size() == 1) return 1;
    int arg = 1;
    double best = -1.0;
    for (std::size_t i = 0; i + 1 < eigenvalues.size(); ++i) {
        const double gap = eigenvalues[i] - eigenvalues[i + 1];
        if (gap > best) {
            best = gap;
            arg = static_cast<int>(i) + 1;
        }
    }
    return arg;
}

int choose_dim(const Eigen::MatrixXd& adjacency, int max_dim) {
    if (max_dim < 2) throw std::invalid_argument("choose_dim: max_dim must be >= 2");
    PositiveSpectrum spec = positive_spectrum(adjacency, "choose_dim");
    if (spec.values.empty()) {
        throw RankDeficiencyError("choose_dim: no positive eigenvalues");
    }
    if (static_cast<int>(spec.values.size()) > max_dim) {
        spec.values.resize(static_cast<std::size_t>(max_dim));
    }
    return dominant_gap(spec.values);
}

Eigen::MatrixXd procrustes_align(const Eigen::MatrixXd& b_hat, const Eigen::MatrixXd& b_ref) {
    if (b_hat.rows() != b_ref.rows() || b_hat.cols() != b_ref.cols()) {
        throw std::invalid_argument("procrustes_align: shape mismatch");
    }
    const Eigen::MatrixXd cross = b_hat.transpose() * b_ref;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

Eigen::MatrixXd load_edge_list(const std::string& path, int n_hint) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_edge_list: cannot open " + path);
    std::vector<std::pair<long, long>> edges;
    long max_index = -1;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream fields(line);
        long i = 0, j = 0;
        if (!(fields >> i >> j)) {
            throw std::invalid_argument("load_edge_list: malformed line " + std::to_string(lineno));
        }
        if (i < 0 || j < 0 || i == j) {
            throw std::invalid_argument("load_edge_list: invalid edge on line " + std::to_string(lineno));
        }
        max_index = std::max({max_index, i, j});
        edges.emplace_back(i, j);
    }
    const long n = std::max(static_cast<long>(n_hint), max_index + 1);
    if (n < 1) throw std::invalid_argument("load_edge_list: no nodes");
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [i, j] : edges) {
        a(i, j) = 1.0;
        a(j, i) = 1.0;
    }
    return a;
}

void save_edge_list(const Eigen::MatrixXd& adjacency, const std::string& path) {
    require_symmetric(adjacency, "save_edge_list");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_edge_list: cannot open " + path);
    const Eigen::Index n = adjacency.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (adjacency(i, j) != 0.0) out << i << ' ' << j << '\n';
        }
    }
}

}  // namespace hetgm
