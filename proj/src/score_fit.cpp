#include "hetgm/score_fit.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include <Eigen/IterativeLinearSolvers>

#include "hetgm/errors.hpp"

namespace hetgm {

namespace {

constexpr char kModelMagic[8] = {'H', 'G', 'S', 'M', '0', '0', '1', '\0'};

void require_pair(const Eigen::MatrixXd& x, const Eigen::MatrixXd& b, const char* who) {
    if (x.rows() != b.rows()) {
        throw std::invalid_argument(std::string(who) + ": row counts of data and embedding differ");
    }
    if (x.rows() < 1 || x.cols() < 1 || b.cols() < 1) {
        throw std::invalid_argument(std::string(who) + ": empty input");
    }
    if (!x.allFinite() || !b.allFinite()) {
        throw std::invalid_argument(std::string(who) + ": non-finite entries");
    }
}

// Weights v_i = k2(beta, b_i) * k1(z, z_i) and differences E(i, :) = z - z_i,
// shared by score and partial evaluation.
struct EvalTerms {
    Eigen::VectorXd v;
    Eigen::MatrixXd e;
};

EvalTerms eval_terms(const RepresenterModel& model, const Eigen::Ref<const Eigen::VectorXd>& z,
                     const Eigen::Ref<const Eigen::VectorXd>& beta) {
    if (z.size() != model.d()) throw std::invalid_argument("evaluate: data dimension mismatch");
    if (beta.size() != model.m()) throw std::invalid_argument("evaluate: embedding dimension mismatch");
    const double sx2 = model.kernel.sigma_x * model.kernel.sigma_x;
    const double sb2 = model.kernel.sigma_b * model.kernel.sigma_b;
    EvalTerms t;
    t.e = (-model.train_x).rowwise() + z.transpose();
    t.v = (-sx2 * t.e.rowwise().squaredNorm()).array().exp() *
          (-sb2 * ((-model.train_b).rowwise() + beta.transpose()).rowwise().squaredNorm())
              .array()
              .exp();
    return t;
}

}  // namespace

void FitConfig::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("FitConfig: lambda must be positive and finite");
    }
    kernel.validate();
}

LinearSystem assemble_system(const Eigen::MatrixXd& x, const Eigen::MatrixXd& b,
                             const FitConfig& config) {
    require_pair(x, b, "assemble_system");
    config.validate();
    const auto n = x.rows();
    const double sx2 = config.kernel.sigma_x * config.kernel.sigma_x;

    LinearSystem sys;
    const Eigen::MatrixXd g2 = gram(b, config.kernel.sigma_b);
    sys.m = gram(x, config.kernel.sigma_x).cwiseProduct(g2);

    // H(i, j) = (2 sigma_x^2 / n) sum_i' M(i, i') (x(i,j) - x(i',j)).
    const Eigen::VectorXd row_sum = sys.m.rowwise().sum();
    sys.h = (2.0 * sx2 / static_cast<double>(n)) *
            (row_sum.asDiagonal() * x - sys.m * x);
    return sys;
}

Standardization column_standardization(const Eigen::MatrixXd& x) {
    Standardization s;
    s.mean = x.colwise().mean();
    const Eigen::VectorXd var =
        (x.rowwise() - s.mean.transpose()).array().square().colwise().mean();
    s.scale = var.array().sqrt();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
        if (!(s.scale(j) > 0.0)) s.scale(j) = 1.0;
    }
    return s;
}

Eigen::MatrixXd apply_standardization(const Eigen::MatrixXd& x, const Standardization& s) {
    return (x.rowwise() - s.mean.transpose()).array().rowwise() / s.scale.transpose().array();
}

RepresenterModel fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& b_hat,
                     const FitConfig& config) {
    require_pair(x, b_hat, "fit");
    config.validate();
    const auto n = x.rows();
    const auto d = x.cols();

    RepresenterModel model;
    model.lambda = config.lambda;
    model.kernel = config.kernel;
    model.train_b = b_hat;
    if (config.standardize) {
        const Standardization s = column_standardization(x);
        model.col_mean = s.mean;
        model.col_scale = s.scale;
        model.train_x = apply_standardization(x, s);
    } else {
        model.col_mean = Eigen::VectorXd::Zero(d);
        model.col_scale = Eigen::VectorXd::Ones(d);
        model.train_x = x;
    }

    const LinearSystem sys = assemble_system(model.train_x, model.train_b, config);
    const double ridge = static_cast<double>(n) * config.lambda;
    Eigen::MatrixXd lhs = sys.m;
    lhs.diagonal().array() += ridge;

    if (n <= config.cg_threshold) {
        Eigen::LLT<Eigen::MatrixXd> llt(lhs);
        if (llt.info() != Eigen::Success) {
            throw SolverError("fit: Cholesky factorization failed (n=" + std::to_string(n) +
                              ", lambda=" + std::to_string(config.lambda) +
                              ", diag range [" + std::to_string(lhs.diagonal().minCoeff()) + ", " +
                              std::to_string(lhs.diagonal().maxCoeff()) + "])");
        }
        model.coeffs = llt.solve(sys.h / config.lambda);
    } else {
        Eigen::ConjugateGradient<Eigen::MatrixXd, Eigen::Lower | Eigen::Upper> cg;
        cg.setTolerance(1e-10);
        cg.setMaxIterations(10 * n);
        cg.compute(lhs);
        model.coeffs = cg.solve(sys.h / config.lambda);
        if (cg.info() != Eigen::Success) {
            throw SolverError("fit: conjugate gradient did not converge (error " +
                              std::to_string(cg.error()) + ")");
        }
    }

    const double residual = (lhs * model.coeffs - sys.h / config.lambda).norm();
    const double budget = 1e-8 * (1.0 + sys.h.norm() / config.lambda);
    if (!(residual <= budget)) {
        throw SolverError("fit: solution residual " + std::to_string(residual) +
                          " exceeds tolerance " + std::to_string(budget));
    }
    return model;
}

Eigen::VectorXd RepresenterModel::standardize(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != d()) throw std::invalid_argument("standardize: dimension mismatch");
    return (x - col_mean).cwiseQuotient(col_scale);
}

Eigen::VectorXd RepresenterModel::score_std(const Eigen::Ref<const Eigen::VectorXd>& z,
                                            const Eigen::Ref<const Eigen::VectorXd>& beta) const {
    const EvalTerms t = eval_terms(*this, z, beta);
    const double sx2 = kernel.sigma_x * kernel.sigma_x;
    const double offset = 2.0 * sx2 / (lambda * static_cast<double>(n()));
    return coeffs.transpose() * t.v - offset * (t.e.transpose() * t.v);
}

Eigen::MatrixXd RepresenterModel::partials_std(const Eigen::Ref<const Eigen::VectorXd>& z,
                                               const Eigen::Ref<const Eigen::VectorXd>& beta) const {
    const EvalTerms t = eval_terms(*this, z, beta);
    const double sx2 = kernel.sigma_x * kernel.sigma_x;
    const double c = 1.0 / (lambda * static_cast<double>(n()));
    Eigen::MatrixXd p = -2.0 * sx2 * (t.e.transpose() * (t.v.asDiagonal() * coeffs));
    p.noalias() += (4.0 * sx2 * sx2 * c) * (t.e.transpose() * (t.v.asDiagonal() * t.e));
    p.diagonal().array() -= 2.0 * sx2 * c * t.v.sum();
    return p;
}

double RepresenterModel::loss_term_std(const Eigen::Ref<const Eigen::VectorXd>& z,
                                       const Eigen::Ref<const Eigen::VectorXd>& beta) const {
    const EvalTerms t = eval_terms(*this, z, beta);
    const double sx2 = kernel.sigma_x * kernel.sigma_x;
    const double c = 1.0 / (lambda * static_cast<double>(n()));
    const Eigen::VectorXd score =
        coeffs.transpose() * t.v - (2.0 * sx2 * c) * (t.e.transpose() * t.v);
    const double trace = -2.0 * sx2 * t.v.dot(t.e.cwiseProduct(coeffs).rowwise().sum()) +
                         4.0 * sx2 * sx2 * c * t.v.dot(t.e.rowwise().squaredNorm()) -
                         2.0 * sx2 * c * static_cast<double>(d()) * t.v.sum();
    return 0.5 * score.squaredNorm() + trace;
}

Eigen::VectorXd evaluate_score(const RepresenterModel& model,
                               const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& beta) {
    return model.score_std(model.standardize(x), beta);
}

Eigen::MatrixXd score_partials(const RepresenterModel& model,
                               const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& beta) {
    return model.partials_std(model.standardize(x), beta);
}

double empirical_loss(const RepresenterModel& model, const Eigen::MatrixXd& x_eval,
                      const Eigen::MatrixXd& b_eval) {
    if (x_eval.rows() == 0) throw std::invalid_argument("empirical_loss: empty evaluation set");
    if (x_eval.rows() != b_eval.rows()) {
        throw std::invalid_argument("empirical_loss: row counts differ");
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < x_eval.rows(); ++i) {
        total += model.loss_term_std(model.standardize(x_eval.row(i)), b_eval.row(i));
    }
    return total / static_cast<double>(x_eval.rows());
}

double rkhs_norm_sq(const RepresenterModel& model) {
    const auto n = model.n();
    const double sx = model.kernel.sigma_x;
    const double sx2 = sx * sx;
    FitConfig cfg;
    cfg.lambda = model.lambda;
    cfg.kernel = model.kernel;
    cfg.standardize = false;
    const LinearSystem sys = assemble_system(model.train_x, model.train_b, cfg);

    // |s|_K^2 = tr(A^T M A) - (2/lambda) <A, H>
    //           + (1/(lambda n))^2 sum_{i,i'} G2(i,i') T(i,i'),
    // with T(i,i') = sum_j hess12_k1(x_i, x_i', sigma, j, j)
    //             = (2 sigma^2 d - 4 sigma^4 |x_i - x_i'|^2) k1(x_i, x_i').
    const double quad = (model.coeffs.transpose() * sys.m * model.coeffs).trace();
    const double cross = -2.0 / model.lambda * model.coeffs.cwiseProduct(sys.h).sum();

    const Eigen::MatrixXd g1 = gram(model.train_x, sx);
    const Eigen::MatrixXd g2 = gram(model.train_b, model.kernel.sigma_b);
    double offset = 0.0;
    const double dd = static_cast<double>(model.d());
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            const double dist2 = (model.train_x.row(i) - model.train_x.row(k)).squaredNorm();
            offset += g2(i, k) * (2.0 * sx2 * dd - 4.0 * sx2 * sx2 * dist2) * g1(i, k);
        }
    }
    const double c = 1.0 / (model.lambda * static_cast<double>(n));
    return quad + cross + c * c * offset;
}

double training_objective(const RepresenterModel& model) {
    double data = 0.0;
    for (int i = 0; i < model.n(); ++i) {
        data += model.loss_term_std(model.train_x.row(i), model.train_b.row(i));
    }
    data /= static_cast<double>(model.n());
    return data + 0.5 * model.lambda * rkhs_norm_sq(model);
}

namespace {

void write_bytes(std::ofstream& out, const void* p, std::size_t bytes) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(bytes));
}

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            write_bytes(out, &v, sizeof(v));
        }
    }
}

void read_bytes(std::ifstream& in, void* p, std::size_t bytes) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(bytes));
    if (!in) throw std::runtime_error("load_model: truncated file");
}

Eigen::MatrixXd read_matrix(std::ifstream& in, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            double v = 0.0;
            read_bytes(in, &v, sizeof(v));
            m(i, j) = v;
        }
    }
    return m;
}

}  // namespace

void save_model(const RepresenterModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_model: cannot open " + path);
    write_bytes(out, kModelMagic, sizeof(kModelMagic));
    const std::int64_t n = model.n(), d = model.d(), m = model.m();
    write_bytes(out, &n, sizeof(n));
    write_bytes(out, &d, sizeof(d));
    write_bytes(out, &m, sizeof(m));
    write_bytes(out, &model.lambda, sizeof(double));
    write_bytes(out, &model.kernel.sigma_x, sizeof(double));
    write_bytes(out, &model.kernel.sigma_b, sizeof(double));
    write_matrix(out, model.col_mean);
    write_matrix(out, model.col_scale);
    write_matrix(out, model.train_x);
    write_matrix(out, model.train_b);
    write_matrix(out, model.coeffs);
    if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

RepresenterModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_model: cannot open " + path);
    char magic[8];
    read_bytes(in, magic, sizeof(magic));
    if (std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
        throw std::runtime_error("load_model: bad magic in " + path);
    }
    std::int64_t n = 0, d = 0, m = 0;
    read_bytes(in, &n, sizeof(n));
    read_bytes(in, &d, sizeof(d));
    read_bytes(in, &m, sizeof(m));
    if (n < 1 || d < 1 || m < 1) throw std::runtime_error("load_model: bad header in " + path);
    RepresenterModel model;
    read_bytes(in, &model.lambda, sizeof(double));
    read_bytes(in, &model.kernel.sigma_x, sizeof(double));
    read_bytes(in, &model.kernel.sigma_b, sizeof(double));
    model.col_mean = read_matrix(in, d, 1);
    model.col_scale = read_matrix(in, d, 1);
    model.train_x = read_matrix(in, n, d);
    model.train_b = read_matrix(in, n, m);
    model.coeffs = read_matrix(in, n, d);
    return model;
}

}  // namespace hetgm
