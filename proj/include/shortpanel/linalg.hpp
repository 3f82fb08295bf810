#pragma once

#include <Eigen/Dense>

#include <optional>

namespace shortpanel::linalg {

/// Full SVD B = U * diag(singular_values) * V', singular values descending.
struct SvdFactors {
    Eigen::MatrixXd u;                // m x m
    Eigen::VectorXd singular_values;  // min(m, n)
    Eigen::MatrixXd v;                // n x n
};

SvdFactors svd(const Eigen::Ref<const Eigen::MatrixXd>& b);

/// Default relative rank tolerance: max(m, n) * machine epsilon.
double default_rank_tol(Eigen::Index rows, Eigen::Index cols);

/// Number of singular values above rank_tol * sigma_1.
Eigen::Index numerical_rank(const Eigen::VectorXd& singular_values, double rank_tol);

/// Moore-Penrose inverse. Singular values below rank_tol * sigma_1 are
/// treated as zero; rank_tol defaults to default_rank_tol(m, n).
Eigen::MatrixXd svd_pinv(const Eigen::Ref<const Eigen::MatrixXd>& b,
                         std::optional<double> rank_tol = std::nullopt);

/// (B'B + delta I)^{-1} B', evaluated as V diag(s / (s^2 + delta)) U'.
/// Throws ValidationError unless delta > 0.
Eigen::MatrixXd tikhonov_inverse(const Eigen::Ref<const Eigen::MatrixXd>& b, double delta);

/// Same as tikhonov_inverse but reuses an existing decomposition of B.
Eigen::MatrixXd tikhonov_inverse(const SvdFactors& factors, double delta);

/// Symmetric square root of a symmetric positive semidefinite matrix.
/// Eigenvalues in [-1e-8, 0) (relative to max(1, |W|)) are clamped to zero;
/// asymmetric input or a more negative eigenvalue throws ValidationError.
Eigen::MatrixXd psd_sqrt(const Eigen::Ref<const Eigen::MatrixXd>& w);

/// Largest singular value; 0 for an empty or zero matrix.
double spectral_norm(const Eigen::Ref<const Eigen::MatrixXd>& b);

}  // namespace shortpanel::linalg
