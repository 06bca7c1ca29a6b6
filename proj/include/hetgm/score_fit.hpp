#pragma once

#include <Eigen/Dense>
#include <string>

#include "hetgm/kernels.hpp"

namespace hetgm {

struct FitConfig {
    double lambda = 1e-3;
    KernelConfig kernel;
    /// Center and scale the data columns before fitting. The transform is
    /// recorded in the model; scores and partials are reported on the
    /// standardized scale.
    bool standardize = true;
    /// Above this training size the ridge system is solved by conjugate
    /// gradient instead of a dense Cholesky factorization.
    int cg_threshold = 4000;

    void validate() const;
};

/// Collapsed normal equations of the kernel score-matching fit.
///
/// The full system couples n*d representer coefficients, but its matrix is
/// (G1 .* G2) kron I_d and its right-hand side is block-structured, so only
/// the n x n factor M = G1 .* G2 and the n x d matrix
///   H(i, j) = (1/n) sum_i' G2(i, i') * grad2_k1(x_i, x_i', sigma_x, j)
/// are ever formed. Reshaping the coefficient vector to n x d rows turns the
/// n*d x n*d solve into one SPD solve with d right-hand sides.
struct LinearSystem {
    Eigen::MatrixXd m;  // n x n
    Eigen::MatrixXd h;  // n x d
};

LinearSystem assemble_system(const Eigen::MatrixXd& x, const Eigen::MatrixXd& b,
                             const FitConfig& config);

/// Column-wise centering and scaling to unit variance (population variance;
/// constant columns keep scale 1).
struct Standardization {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
};

Standardization column_standardization(const Eigen::MatrixXd& x);
Eigen::MatrixXd apply_standardization(const Eigen::MatrixXd& x, const Standardization& s);

/// Fitted score estimator: training points (standardized), embeddings,
/// representer coefficient matrix, penalty and kernel parameters. Treat all
/// fields as immutable after construction.
///
/// The coefficients are stored n x d: row i holds the d coefficients of the
/// kernel section anchored at training pair (x_i, b_i). The offset part of
/// the representer expansion (the -1/(lambda n) derivative sections) carries
/// no free coefficients and is reconstructed on evaluation.
struct RepresenterModel {
    Eigen::MatrixXd train_x;
    Eigen::MatrixXd train_b;
    Eigen::MatrixXd coeffs;
    double lambda = 0.0;
    KernelConfig kernel;
    Eigen::VectorXd col_mean;   // standardization recorded at fit time
    Eigen::VectorXd col_scale;

    int n() const { return static_cast<int>(train_x.rows()); }
    int d() const { return static_cast<int>(train_x.cols()); }
    int m() const { return static_cast<int>(train_b.cols()); }

    /// Maps a raw data vector onto the scale the model was fitted on.
    Eigen::VectorXd standardize(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    /// Score at an already-standardized point. Component l:
    ///   sum_i k2(beta, b_i) [ A(i,l) k1(z, z_i)
    ///                         - (1/(lambda n)) grad2_k1(z, z_i, sigma_x, l) ].
    Eigen::VectorXd score_std(const Eigen::Ref<const Eigen::VectorXd>& z,
                              const Eigen::Ref<const Eigen::VectorXd>& beta) const;

    /// (j,l) entry: the partial of score component l with respect to
    /// coordinate j of the (standardized) evaluation point.
    Eigen::MatrixXd partials_std(const Eigen::Ref<const Eigen::VectorXd>& z,
                                 const Eigen::Ref<const Eigen::VectorXd>& beta) const;

    /// 0.5*|score|^2 + trace(partials) at a standardized point, without
    /// forming the full d x d partials matrix.
    double loss_term_std(const Eigen::Ref<const Eigen::VectorXd>& z,
                         const Eigen::Ref<const Eigen::VectorXd>& beta) const;
};

RepresenterModel fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& b_hat,
                     const FitConfig& config);

/// Score at a raw data point (standardized internally, reported on the
/// standardized scale).
Eigen::VectorXd evaluate_score(const RepresenterModel& model,
                               const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& beta);

Eigen::MatrixXd score_partials(const RepresenterModel& model,
                               const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& beta);

/// Mean of 0.5*|s|^2 + trace(grad s) over evaluation pairs; the data term of
/// the score-matching objective, without the penalty.
double empirical_loss(const RepresenterModel& model, const Eigen::MatrixXd& x_eval,
                      const Eigen::MatrixXd& b_eval);

/// Squared RKHS norm of the fitted score, in closed form from the coefficient
/// matrix, the offset term and the Gram blocks.
double rkhs_norm_sq(const RepresenterModel& model);

/// Full fitted objective: data term over the training sample plus
/// (lambda/2) * rkhs_norm_sq.
double training_objective(const RepresenterModel& model);

/// Binary model file; see README for the exact byte layout. Reload is
/// bit-exact.
void save_model(const RepresenterModel& model, const std::string& path);
RepresenterModel load_model(const std::string& path);

}  // namespace hetgm
