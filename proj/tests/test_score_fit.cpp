#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>

#include "hetgm/errors.hpp"
#include "hetgm/rng.hpp"
#include "hetgm/score_fit.hpp"

using namespace hetgm;

namespace {

Eigen::MatrixXd random_matrix(int n, int d, Rng& rng) {
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
    }
    return x;
}

// ---------------------------------------------------------------------------
// Independent oracle code. Everything below rebuilds the objects from their
// entrywise definitions with plain loops; none of it calls the library's
// assembly or evaluation paths.

double o_k1(const Eigen::MatrixXd& x, int i, int k, double s) {
    return std::exp(-s * s * (x.row(i) - x.row(k)).squaredNorm());
}

double o_k2(const Eigen::MatrixXd& b, int i, int k, double s) {
    return std::exp(-s * s * (b.row(i) - b.row(k)).squaredNorm());
}

struct DenseSystem {
    Eigen::MatrixXd f;  // nd x nd
    Eigen::VectorXd h;  // nd
};

// The flat system over all n*d representer coefficients, index (i, j) -> i*d + j.
DenseSystem dense_system(const Eigen::MatrixXd& x, const Eigen::MatrixXd& b, double sx,
                         double sb) {
    const int n = int(x.rows()), d = int(x.cols());
    DenseSystem sys;
    sys.f = Eigen::MatrixXd::Zero(n * d, n * d);
    sys.h = Eigen::VectorXd::Zero(n * d);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            const double kk = o_k1(x, i, k, sx) * o_k2(b, i, k, sb);
            for (int j = 0; j < d; ++j) {
                sys.f(i * d + j, k * d + j) = kk;
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            double sum = 0.0;
            for (int k = 0; k < n; ++k) {
                // derivative of k1 with respect to coordinate j of its second
                // argument x_k, evaluated at (x_i, x_k)
                sum += o_k2(b, i, k, sb) * 2.0 * sx * sx * (x(i, j) - x(k, j)) * o_k1(x, i, k, sx);
            }
            sys.h(i * d + j) = sum / double(n);
        }
    }
    return sys;
}

Eigen::VectorXd dense_solve(const DenseSystem& sys, int n, double lambda) {
    Eigen::MatrixXd lhs = sys.f;
    lhs.diagonal().array() += double(n) * lambda;
    return Eigen::LDLT<Eigen::MatrixXd>(lhs).solve(sys.h / lambda);
}

// Objective evaluator over the full section span: theta holds n*d
// coefficients on the kernel sections followed by n*d coefficients on the
// derivative sections. The fitted solution corresponds to the second half
// frozen at -1/(lambda n).
class ObjectiveOracle {
  public:
    ObjectiveOracle(Eigen::MatrixXd x, Eigen::MatrixXd b, double sx, double sb, double lambda)
        : x_(std::move(x)), b_(std::move(b)), sx_(sx), sb_(sb), lambda_(lambda) {
        const int n = int(x_.rows()), d = int(x_.cols());
        const int p = 2 * n * d;
        gram_.resize(p, p);
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < n; ++k) {
                const double k1v = o_k1(x_, i, k, sx_);
                const double k2v = o_k2(b_, i, k, sb_);
                for (int j = 0; j < d; ++j) {
                    for (int j2 = 0; j2 < d; ++j2) {
                        const int a = i * d + j, c = k * d + j2;
                        if (j != j2) {
                            gram_(a, c) = gram_(a, c + n * d) = 0.0;
                            gram_(a + n * d, c) = gram_(a + n * d, c + n * d) = 0.0;
                            continue;
                        }
                        const double diff = x_(i, j) - x_(k, j);
                        gram_(a, c) = k1v * k2v;
                        // <K_i e_j, dK_k e_j>: derivative on the anchor x_k
                        gram_(a, c + n * d) = k2v * 2.0 * sx_ * sx_ * diff * k1v;
                        gram_(a + n * d, c) = k2v * -2.0 * sx_ * sx_ * diff * k1v;
                        gram_(a + n * d, c + n * d) =
                            k2v * (2.0 * sx_ * sx_ - 4.0 * sx_ * sx_ * sx_ * sx_ * diff * diff) *
                            k1v;
                    }
                }
            }
        }
    }

    int size() const { return int(gram_.rows()); }

    double operator()(const Eigen::VectorXd& theta) const {
        const int n = int(x_.rows()), d = int(x_.cols());
        double data = 0.0;
        for (int k = 0; k < n; ++k) {
            double sq = 0.0, trace = 0.0;
            for (int j = 0; j < d; ++j) {
                double sj = 0.0, djj = 0.0;
                for (int i = 0; i < n; ++i) {
                    const double k1v = o_k1(x_, k, i, sx_);
                    const double k2v = o_k2(b_, k, i, sb_);
                    const double diff_j = x_(k, j) - x_(i, j);
                    const double c = theta(i * d + j);
                    const double g = theta(n * d + i * d + j);
                    sj += k2v * k1v * (c + g * 2.0 * sx_ * sx_ * diff_j);
                    const double dk1 = -2.0 * sx_ * sx_ * diff_j * k1v;
                    djj += k2v * (c * dk1 +
                                  g * 2.0 * sx_ * sx_ * (k1v + diff_j * dk1));
                }
                sq += sj * sj;
                trace += djj;
            }
            data += 0.5 * sq + trace;
        }
        data /= double(n);
        return data + 0.5 * lambda_ * theta.dot(gram_ * theta);
    }

    // Exact minimizer of the quadratic via second differences (exact for a
    // quadratic function, whatever the step).
    double minimum() const {
        const int p = size();
        const double j0 = (*this)(Eigen::VectorXd::Zero(p));
        Eigen::VectorXd grad(p);
        Eigen::MatrixXd hess(p, p);
        std::vector<double> plus(p), minus(p);
        for (int i = 0; i < p; ++i) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(p);
            e(i) = 1.0;
            plus[i] = (*this)(e);
            minus[i] = (*this)(-e);
            grad(i) = 0.5 * (plus[i] - minus[i]);
            hess(i, i) = plus[i] + minus[i] - 2.0 * j0;
        }
        for (int i = 0; i < p; ++i) {
            for (int k = i + 1; k < p; ++k) {
                Eigen::VectorXd e = Eigen::VectorXd::Zero(p);
                e(i) = 1.0;
                e(k) = 1.0;
                const double mixed = (*this)(e) - plus[i] - plus[k] + j0;
                hess(i, k) = mixed;
                hess(k, i) = mixed;
            }
        }
        // The sections can be linearly dependent, so minimize through a
        // pseudo-inverse.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess);
        const double tol = 1e-10 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
        Eigen::VectorXd step = Eigen::VectorXd::Zero(p);
        for (int i = 0; i < p; ++i) {
            const double ev = eig.eigenvalues()(i);
            if (ev > tol) {
                step += eig.eigenvectors().col(i) * (eig.eigenvectors().col(i).dot(-grad) / ev);
            }
        }
        return (*this)(step);
    }

  private:
    Eigen::MatrixXd x_, b_;
    double sx_, sb_, lambda_;
    Eigen::MatrixXd gram_;
};

// Plain kernel score matching on the data kernel only; the homogeneous
// reduction target.
Eigen::MatrixXd plain_ksm_coeffs(const Eigen::MatrixXd& x, double sigma, double lambda) {
    const int n = int(x.rows()), d = int(x.cols());
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) g(i, k) = o_k1(x, i, k, sigma);
    }
    Eigen::MatrixXd h(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            double sum = 0.0;
            for (int k = 0; k < n; ++k) {
                sum += 2.0 * sigma * sigma * (x(i, j) - x(k, j)) * g(i, k);
            }
            h(i, j) = sum / double(n);
        }
    }
    Eigen::MatrixXd lhs = g;
    lhs.diagonal().array() += double(n) * lambda;
    return Eigen::LDLT<Eigen::MatrixXd>(lhs).solve(h / lambda);
}

FitConfig make_config(double lambda, double sx, double sb, bool standardize = false) {
    FitConfig cfg;
    cfg.lambda = lambda;
    cfg.kernel = KernelConfig{sx, sb};
    cfg.standardize = standardize;
    return cfg;
}

}  // namespace

TEST_CASE("assemble_system single point") {
    Eigen::MatrixXd x(1, 3), b(1, 2);
    x << 0.4, -1.0, 2.0;
    b << 0.1, 0.2;
    const LinearSystem sys = assemble_system(x, b, make_config(0.1, 1.0, 1.0));
    CHECK(sys.m.rows() == 1);
    CHECK(sys.m(0, 0) == 1.0);
    CHECK(sys.h.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("assemble_system matches the literal system entrywise") {
    Rng rng(21);
    const Eigen::MatrixXd x = random_matrix(3, 2, rng);
    const Eigen::MatrixXd b = random_matrix(3, 2, rng);
    const double sx = 0.8, sb = 1.2;
    const LinearSystem sys = assemble_system(x, b, make_config(0.05, sx, sb));
    const DenseSystem dense = dense_system(x, b, sx, sb);
    const int n = 3, d = 2;
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            for (int j = 0; j < d; ++j) {
                for (int j2 = 0; j2 < d; ++j2) {
                    const double expect = j == j2 ? sys.m(i, k) : 0.0;
                    CHECK(dense.f(i * d + j, k * d + j2) ==
                          doctest::Approx(expect).epsilon(1e-14));
                }
            }
            // the factored matrix itself
        }
        for (int j = 0; j < d; ++j) {
            CHECK(sys.h(i, j) == doctest::Approx(dense.h(i * d + j)).epsilon(1e-13));
        }
    }
}

TEST_CASE("identical embeddings reduce the system matrix to the data Gram") {
    Rng rng(22);
    const Eigen::MatrixXd x = random_matrix(6, 2, rng);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(6, 2);
    b.col(0).setConstant(0.7);
    const LinearSystem sys = assemble_system(x, b, make_config(0.1, 0.9, 1.4));
    const Eigen::MatrixXd g1 = gram(x, 0.9);
    CHECK((sys.m - g1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("assemble_system input validation") {
    Rng rng(23);
    const Eigen::MatrixXd x = random_matrix(4, 2, rng);
    const Eigen::MatrixXd b3 = random_matrix(3, 1, rng);
    CHECK_THROWS_AS(assemble_system(x, b3, make_config(0.1, 1, 1)), std::invalid_argument);
    Eigen::MatrixXd bad = x;
    bad(1, 1) = std::nan("");
    CHECK_THROWS_AS(assemble_system(bad, random_matrix(4, 1, rng), make_config(0.1, 1, 1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit(x, random_matrix(4, 1, rng), make_config(0.0, 1, 1)),
                    std::invalid_argument);
}

TEST_CASE("trivial single-point fit is the zero coefficient matrix") {
    Eigen::MatrixXd x(1, 1), b(1, 1);
    x << 0.3;
    b << 0.0;
    const RepresenterModel model = fit(x, b, make_config(0.5, 1.0, 1.0, true));
    CHECK(model.coeffs.cwiseAbs().maxCoeff() == 0.0);
    CHECK(evaluate_score(model, x.row(0), b.row(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("collapsed solve matches the dense solve of the literal system") {
    Rng rng(24);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + int(rng.below(8));
        const int d = 1 + int(rng.below(3));
        const int m = 1 + int(rng.below(2));
        const Eigen::MatrixXd x = random_matrix(n, d, rng);
        const Eigen::MatrixXd b = random_matrix(n, m, rng);
        const double sx = 0.5 + rng.uniform();
        const double sb = 0.5 + rng.uniform();
        const double lambda = std::pow(10.0, -3.0 * rng.uniform());
        const RepresenterModel model = fit(x, b, make_config(lambda, sx, sb));
        const Eigen::VectorXd alpha = dense_solve(dense_system(x, b, sx, sb), n, lambda);
        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) {
                err = std::max(err, std::abs(model.coeffs(i, j) - alpha(i * d + j)));
            }
        }
        CHECK(err <= 1e-8 * (1.0 + alpha.norm()));
    }
}

TEST_CASE("fit residual satisfies the model invariant") {
    Rng rng(25);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + int(rng.below(10));
        const int d = 1 + int(rng.below(3));
        const Eigen::MatrixXd x = random_matrix(n, d, rng);
        const Eigen::MatrixXd b = random_matrix(n, 2, rng);
        const double lambda = std::pow(10.0, -2.0 * rng.uniform());
        const FitConfig cfg = make_config(lambda, 1.0, 1.0);
        const RepresenterModel model = fit(x, b, cfg);
        const LinearSystem sys = assemble_system(x, b, cfg);
        Eigen::MatrixXd lhs = sys.m;
        lhs.diagonal().array() += double(n) * lambda;
        const double residual = (lhs * model.coeffs - sys.h / lambda).norm();
        CHECK(residual <= 1e-8 * (1.0 + sys.h.norm() / lambda));
    }
}

TEST_CASE("fitted objective matches direct minimization over the section span") {
    Rng rng(26);
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 2 + int(rng.below(5));
        const int d = 1 + int(rng.below(2));
        const Eigen::MatrixXd x = random_matrix(n, d, rng);
        const Eigen::MatrixXd b = random_matrix(n, 1, rng);
        const double sx = 0.6 + 0.5 * rng.uniform();
        const double sb = 0.6 + 0.5 * rng.uniform();
        const double lambda = std::pow(10.0, -1.5 * rng.uniform());
        const RepresenterModel model = fit(x, b, make_config(lambda, sx, sb));
        const ObjectiveOracle oracle(x, b, sx, sb, lambda);

        // the library solution embedded in the oracle's parameterization
        Eigen::VectorXd theta = Eigen::VectorXd::Zero(oracle.size());
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) {
                theta(i * d + j) = model.coeffs(i, j);
                theta(n * d + i * d + j) = -1.0 / (lambda * double(n));
            }
        }
        const double lib_value = training_objective(model);
        CHECK(oracle(theta) == doctest::Approx(lib_value).epsilon(1e-9));
        CHECK(std::abs(lib_value - oracle.minimum()) <= 1e-4);
    }
}

TEST_CASE("score and partials vanish for the single-point model away from data terms") {
    Eigen::MatrixXd x(1, 2), b(1, 1);
    x << 0.5, -0.5;
    b << 0.3;
    const double lambda = 0.7, sx = 1.3;
    const RepresenterModel model = fit(x, b, make_config(lambda, sx, 1.0, true));
    CHECK(model.coeffs.cwiseAbs().maxCoeff() == 0.0);
    const Eigen::MatrixXd p = score_partials(model, x.row(0), b.row(0));
    const Eigen::MatrixXd expect =
        -(1.0 / lambda) * 2.0 * sx * sx * Eigen::MatrixXd::Identity(2, 2);
    CHECK((p - expect).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("evaluate_score is affine in the coefficient matrix") {
    Rng rng(27);
    const Eigen::MatrixXd x = random_matrix(5, 2, rng);
    const Eigen::MatrixXd b = random_matrix(5, 1, rng);
    RepresenterModel base = fit(x, b, make_config(0.05, 1.0, 1.0));
    RepresenterModel m1 = base, m2 = base, m12 = base, m0 = base;
    m1.coeffs = random_matrix(5, 2, rng);
    m2.coeffs = random_matrix(5, 2, rng);
    m12.coeffs = m1.coeffs + m2.coeffs;
    m0.coeffs.setZero();
    const Eigen::VectorXd point = random_matrix(1, 2, rng).row(0);
    const Eigen::VectorXd beta = random_matrix(1, 1, rng).row(0);
    const Eigen::VectorXd lhs = evaluate_score(m12, point, beta) + evaluate_score(m0, point, beta);
    const Eigen::VectorXd rhs = evaluate_score(m1, point, beta) + evaluate_score(m2, point, beta);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("score partials agree with finite differences of the score") {
    Rng rng(28);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + int(rng.below(5));
        const int d = 1 + int(rng.below(3));
        const Eigen::MatrixXd x = random_matrix(n, d, rng);
        const Eigen::MatrixXd b = random_matrix(n, 1, rng);
        const RepresenterModel model =
            fit(x, b, make_config(0.02 + 0.2 * rng.uniform(), 0.7, 0.9));
        const Eigen::VectorXd point = random_matrix(1, d, rng).row(0);
        const Eigen::VectorXd beta = random_matrix(1, 1, rng).row(0);
        const Eigen::MatrixXd p = score_partials(model, point, beta);
        const double h = 1e-5;
        for (int j = 0; j < d; ++j) {
            Eigen::VectorXd lo = point, hi = point;
            lo(j) -= h;
            hi(j) += h;
            const Eigen::VectorXd fd =
                (evaluate_score(model, hi, beta) - evaluate_score(model, lo, beta)) / (2.0 * h);
            for (int l = 0; l < d; ++l) {
                CHECK(p(j, l) == doctest::Approx(fd(l)).epsilon(1e-4));
            }
        }
    }
}

TEST_CASE("empirical loss equals the assembled pointwise formula") {
    Rng rng(29);
    const Eigen::MatrixXd x = random_matrix(12, 2, rng);
    const Eigen::MatrixXd b = random_matrix(12, 2, rng);
    const RepresenterModel model = fit(x, b, make_config(0.05, 0.8, 1.1));
    const Eigen::MatrixXd xe = random_matrix(7, 2, rng);
    const Eigen::MatrixXd be = random_matrix(7, 2, rng);
    double expect = 0.0;
    for (int i = 0; i < 7; ++i) {
        const Eigen::VectorXd s = evaluate_score(model, xe.row(i), be.row(i));
        const Eigen::MatrixXd p = score_partials(model, xe.row(i), be.row(i));
        expect += 0.5 * s.squaredNorm() + p.trace();
    }
    expect /= 7.0;
    CHECK(empirical_loss(model, xe, be) == doctest::Approx(expect).epsilon(1e-12));
    CHECK_THROWS_AS(empirical_loss(model, Eigen::MatrixXd(0, 2), Eigen::MatrixXd(0, 2)),
                    std::invalid_argument);
}

TEST_CASE("held-out loss of a Gaussian fit beats the zero score function") {
    Rng rng(30);
    const Eigen::MatrixXd x = random_matrix(400, 1, rng);
    const Eigen::MatrixXd b = Eigen::MatrixXd::Zero(400, 1);
    const double sigma = median_heuristic(x);
    const RepresenterModel model =
        fit(x.topRows(300), b.topRows(300), make_config(0.01, sigma, 1.0, true));
    const double heldout = empirical_loss(model, x.bottomRows(100), b.bottomRows(100));
    // the zero function scores 0; the population optimum scores about -0.5
    CHECK(heldout < -0.2);
    CHECK(heldout > -0.8);
}

TEST_CASE("penalty norm is non-increasing in lambda") {
    Rng rng(31);
    const Eigen::MatrixXd x = random_matrix(40, 2, rng);
    const Eigen::MatrixXd b = random_matrix(40, 1, rng);
    double previous = std::numeric_limits<double>::infinity();
    for (double lambda : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
        const RepresenterModel model = fit(x, b, make_config(lambda, 0.9, 0.9));
        const double norm = std::sqrt(std::max(0.0, rkhs_norm_sq(model)));
        CHECK(norm <= previous * (1.0 + 1e-10));
        previous = norm;
    }
}

TEST_CASE("homogeneous embeddings reduce to plain kernel score matching") {
    Rng rng(32);
    const Eigen::MatrixXd x = random_matrix(25, 3, rng);
    Eigen::MatrixXd b = Eigen::MatrixXd::Constant(25, 2, 0.4);
    const double sigma = 0.85, lambda = 0.02;
    const RepresenterModel model = fit(x, b, make_config(lambda, sigma, 1.7));
    const Eigen::MatrixXd plain = plain_ksm_coeffs(x, sigma, lambda);
    CHECK((model.coeffs - plain).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("fitted score approximates the standard normal score") {
    Rng rng(33);
    const int n = 2000;
    Eigen::MatrixXd x(n, 1);
    for (int i = 0; i < n; ++i) x(i, 0) = rng.normal();
    const Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, 1);
    const Standardization st = column_standardization(x);
    const double sigma = median_heuristic(apply_standardization(x, st));
    const RepresenterModel model = fit(x, b, make_config(3e-3, sigma, 1.0, true));
    double worst = 0.0;
    Eigen::VectorXd point(1), beta = Eigen::VectorXd::Zero(1);
    for (double t = -2.0; t <= 2.0; t += 0.05) {
        point(0) = t;
        const double got = evaluate_score(model, point, beta)(0);
        worst = std::max(worst, std::abs(got - (-t)));
    }
    INFO("sup error vs -x: " << worst);
    CHECK(worst <= 0.3);
}

TEST_CASE("model round trip through the binary format is bit exact") {
    Rng rng(34);
    const Eigen::MatrixXd x = random_matrix(9, 2, rng);
    const Eigen::MatrixXd b = random_matrix(9, 3, rng);
    const RepresenterModel model = fit(x, b, make_config(0.03, 1.1, 0.7, true));
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "hetgm_model_test";
    fs::create_directories(dir);
    const std::string path = (dir / "model.bin").string();
    save_model(model, path);
    const RepresenterModel back = load_model(path);
    CHECK(back.lambda == model.lambda);
    CHECK(back.kernel.sigma_x == model.kernel.sigma_x);
    CHECK(back.kernel.sigma_b == model.kernel.sigma_b);
    CHECK((back.train_x - model.train_x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.train_b - model.train_b).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.coeffs - model.coeffs).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.col_mean - model.col_mean).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.col_scale - model.col_scale).cwiseAbs().maxCoeff() == 0.0);
    fs::remove_all(dir);
}
