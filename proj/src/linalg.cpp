#include "shortpanel/linalg.hpp"

#include "shortpanel/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace shortpanel::linalg {

SvdFactors svd(const Eigen::Ref<const Eigen::MatrixXd>& b) {
    SvdFactors f;
    if (b.rows() == 0 || b.cols() == 0) {
        f.u = Eigen::MatrixXd::Identity(b.rows(), b.rows());
        f.v = Eigen::MatrixXd::Identity(b.cols(), b.cols());
        f.singular_values.resize(0);
        return f;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> jsvd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
    f.u = jsvd.matrixU();
    f.v = jsvd.matrixV();
    f.singular_values = jsvd.singularValues();
    return f;
}

double default_rank_tol(Eigen::Index rows, Eigen::Index cols) {
    return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon();
}

Eigen::Index numerical_rank(const Eigen::VectorXd& singular_values, double rank_tol) {
    if (singular_values.size() == 0 || !(singular_values(0) > 0.0)) return 0;
    const double cutoff = rank_tol * singular_values(0);
    Eigen::Index q = 0;
    while (q < singular_values.size() && singular_values(q) > cutoff) ++q;
    return q;
}

Eigen::MatrixXd svd_pinv(const Eigen::Ref<const Eigen::MatrixXd>& b, std::optional<double> rank_tol) {
    const SvdFactors f = svd(b);
    const double tol = rank_tol.value_or(default_rank_tol(b.rows(), b.cols()));
    const Eigen::Index q = numerical_rank(f.singular_values, tol);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(b.cols(), b.rows());
    for (Eigen::Index j = 0; j < q; ++j)
        out.noalias() += f.v.col(j) * (1.0 / f.singular_values(j)) * f.u.col(j).transpose();
    return out;
}

Eigen::MatrixXd tikhonov_inverse(const SvdFactors& f, double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw ValidationError("Tikhonov parameter must be a positive finite number");
    const Eigen::Index n = f.v.rows();
    const Eigen::Index m = f.u.rows();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, m);
    for (Eigen::Index j = 0; j < f.singular_values.size(); ++j) {
        const double s = f.singular_values(j);
        if (s == 0.0) continue;
        out.noalias() += f.v.col(j) * (s / (s * s + delta)) * f.u.col(j).transpose();
    }
    return out;
}

Eigen::MatrixXd tikhonov_inverse(const Eigen::Ref<const Eigen::MatrixXd>& b, double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw ValidationError("Tikhonov parameter must be a positive finite number");
    return tikhonov_inverse(svd(b), delta);
}

Eigen::MatrixXd psd_sqrt(const Eigen::Ref<const Eigen::MatrixXd>& w) {
    if (w.rows() != w.cols()) throw ValidationError("weighting matrix must be square");
    if (w.size() == 0) return Eigen::MatrixXd(0, 0);
    if (!w.allFinite()) throw ValidationError("weighting matrix has non-finite entries");
    const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
    if ((w - w.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw ValidationError("weighting matrix must be symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (w + w.transpose()));
    Eigen::VectorXd lambda = eig.eigenvalues();
    for (Eigen::Index j = 0; j < lambda.size(); ++j) {
        if (lambda(j) < -1e-8 * scale)
            throw ValidationError("weighting matrix is not positive semidefinite");
        lambda(j) = std::sqrt(std::max(lambda(j), 0.0));
    }
    const Eigen::MatrixXd& q = eig.eigenvectors();
    Eigen::MatrixXd s = q * lambda.asDiagonal() * q.transpose();
    return 0.5 * (s + s.transpose());
}

double spectral_norm(const Eigen::Ref<const Eigen::MatrixXd>& b) {
    if (b.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> jsvd(b);
    return jsvd.singularValues()(0);
}

}  // namespace shortpanel::linalg
