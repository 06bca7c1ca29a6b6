#include "hetgm/graph.hpp"

#include <cmath>
#include <stdexcept>

#include "hetgm/parallel.hpp"
#include "hetgm/rng.hpp"

namespace hetgm {

OmegaField omega(const RepresenterModel& model, const Eigen::MatrixXd& target_embeddings,
                 std::optional<int> eval_subsample, std::uint64_t seed, int threads,
                 bool keep_unsymmetrized) {
    const int n = model.n();
    const int d = model.d();
    if (model.coeffs.rows() != n || model.coeffs.cols() != d) {
        throw std::invalid_argument("omega: model is not fitted");
    }
    if (target_embeddings.cols() != model.m()) {
        throw std::invalid_argument("omega: target embedding dimension mismatch");
    }
    if (eval_subsample && (*eval_subsample < 1 || *eval_subsample > n)) {
        throw std::invalid_argument("omega: eval_subsample out of range");
    }

    std::vector<int> idx;
    if (eval_subsample) {
        idx = Rng(seed).sample_without_replacement(n, *eval_subsample);
    } else {
        idx.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    }
    const auto n_eval = static_cast<Eigen::Index>(idx.size());

    const Eigen::MatrixXd& z = model.train_x;
    Eigen::MatrixXd z_eval(n_eval, d);
    for (Eigen::Index k = 0; k < n_eval; ++k) {
        z_eval.row(k) = z.row(idx[static_cast<std::size_t>(k)]);
    }

    const double sx = model.kernel.sigma_x;
    const double sx2 = sx * sx;
    const double sb2 = model.kernel.sigma_b * model.kernel.sigma_b;
    const double c = 1.0 / (model.lambda * static_cast<double>(n));

    const Eigen::MatrixXd g1_eval = gram_cross(z_eval, z, sx);

    // Flattened products shared by every target: column j*d+l holds
    // Z(:,j).*A(:,l) resp. Z(:,j).*Z(:,l), so all evaluation points of one
    // target reduce to two GEMMs.
    const Eigen::Index dd = static_cast<Eigen::Index>(d) * d;
    Eigen::MatrixXd za(n, dd);
    Eigen::MatrixXd zz(n, dd);
    for (int j = 0; j < d; ++j) {
        for (int l = 0; l < d; ++l) {
            za.col(static_cast<Eigen::Index>(j) * d + l) =
                z.col(j).cwiseProduct(model.coeffs.col(l));
            zz.col(static_cast<Eigen::Index>(j) * d + l) = z.col(j).cwiseProduct(z.col(l));
        }
    }

    const int target_count = static_cast<int>(target_embeddings.rows());
    OmegaField field;
    field.dim = d;
    field.matrices.resize(static_cast<std::size_t>(target_count));
    if (keep_unsymmetrized) field.unsymmetrized.resize(static_cast<std::size_t>(target_count));

    parallel_for(target_count, threads, [&](std::int64_t t) {
        const Eigen::VectorXd w =
            (-sb2 * ((-model.train_b).rowwise() + target_embeddings.row(t)).rowwise().squaredNorm())
                .array()
                .exp();
        const Eigen::MatrixXd cw = g1_eval * w.asDiagonal();
        const Eigen::MatrixXd ca = cw * model.coeffs;  // n_eval x d
        const Eigen::MatrixXd cz = cw * z;             // n_eval x d
        const Eigen::MatrixXd cy = cw * za;            // n_eval x d^2
        const Eigen::MatrixXd cq = cw * zz;            // n_eval x d^2
        const Eigen::VectorXd sv = cw.rowwise().sum();

        Eigen::MatrixXd accum = Eigen::MatrixXd::Zero(d, d);
        Eigen::MatrixXd dmat(d, d);
        for (Eigen::Index k = 0; k < n_eval; ++k) {
            const auto zk = z_eval.row(k);
            for (int j = 0; j < d; ++j) {
                for (int l = 0; l < d; ++l) {
                    const Eigen::Index f = static_cast<Eigen::Index>(j) * d + l;
                    const double grad_part = -2.0 * sx2 * (zk(j) * ca(k, l) - cy(k, f));
                    const double quad = zk(j) * zk(l) * sv(k) - zk(j) * cz(k, l) -
                                        cz(k, j) * zk(l) + cq(k, f);
                    double v = grad_part + 4.0 * sx2 * sx2 * c * quad;
                    if (j == l) v -= 2.0 * sx2 * c * sv(k);
                    dmat(j, l) = v;
                }
            }
            accum.array() += dmat.array().square();
        }
        accum /= static_cast<double>(n_eval);
        if (keep_unsymmetrized) field.unsymmetrized[static_cast<std::size_t>(t)] = accum;
        field.matrices[static_cast<std::size_t>(t)] = 0.5 * (accum + accum.transpose());
    });
    return field;
}

OmegaField omega_from_partials(
    const std::function<Eigen::MatrixXd(int eval_index, int target_index)>& partials,
    int eval_count, int target_count, int dim, bool keep_unsymmetrized) {
    if (eval_count < 1 || target_count < 1 || dim < 1) {
        throw std::invalid_argument("omega_from_partials: empty input");
    }
    OmegaField field;
    field.dim = dim;
    field.matrices.resize(static_cast<std::size_t>(target_count));
    if (keep_unsymmetrized) field.unsymmetrized.resize(static_cast<std::size_t>(target_count));
    for (int t = 0; t < target_count; ++t) {
        Eigen::MatrixXd accum = Eigen::MatrixXd::Zero(dim, dim);
        for (int k = 0; k < eval_count; ++k) {
            accum.array() += partials(k, t).array().square();
        }
        accum /= static_cast<double>(eval_count);
        if (keep_unsymmetrized) field.unsymmetrized[static_cast<std::size_t>(t)] = accum;
        field.matrices[static_cast<std::size_t>(t)] = 0.5 * (accum + accum.transpose());
    }
    return field;
}

EdgeSetCollection threshold_edges(const OmegaField& field, double delta) {
    if (std::isnan(delta) || delta < 0.0) {
        throw std::invalid_argument("threshold_edges: delta must be nonnegative");
    }
    EdgeSetCollection out;
    out.node_count = field.node_count();
    out.dim = field.dim;
    out.edges.resize(static_cast<std::size_t>(out.node_count));
    for (int i = 0; i < out.node_count; ++i) {
        const Eigen::MatrixXd& m = field.matrices[static_cast<std::size_t>(i)];
        auto& set = out.edges[static_cast<std::size_t>(i)];
        for (int j = 0; j < field.dim; ++j) {
            for (int l = j + 1; l < field.dim; ++l) {
                if (m(j, l) >= delta) set.emplace_back(j, l);
            }
        }
    }
    return out;
}

}  // namespace hetgm
