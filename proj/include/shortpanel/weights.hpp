#pragma once

#include "shortpanel/panel.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace shortpanel {

/// Highest Hermite degree in the built-in weight table.
inline constexpr int kMaxHermiteDegree = 10;

/// Physicists' Hermite polynomial H_n(x).
double hermite(int degree, double x);

/// R nonlinear transformations omega(z) of the covariate vector, optionally
/// standardized (mean 0, sample sd 1) over a reference set of control units.
class WeightFunctionSet {
public:
    using RawFunction = std::function<Eigen::VectorXd(const Eigen::Ref<const Eigen::VectorXd>&)>;

    WeightFunctionSet(Eigen::Index count, RawFunction raw, std::string description);

    Eigen::Index count() const { return count_; }
    const std::string& description() const { return description_; }
    bool is_normalized() const { return normalized_; }
    const Eigen::VectorXd& means() const { return mean_; }
    const Eigen::VectorXd& sds() const { return sd_; }

    /// Unnormalized omega(z).
    Eigen::VectorXd raw(const Eigen::Ref<const Eigen::VectorXd>& z) const;
    /// Unnormalized omega for every row of z (n x R).
    Eigen::MatrixXd raw_matrix(const Eigen::Ref<const Eigen::MatrixXd>& z) const;

    /// Copy whose evaluate() standardizes against the rows of z.
    /// Throws NumericalError if some omega_j is constant over those rows.
    WeightFunctionSet normalized_over(const Eigen::Ref<const Eigen::MatrixXd>& z) const;

    /// Standardized omega for every row of z (n x R); raw when not normalized.
    Eigen::MatrixXd evaluate_matrix(const Eigen::Ref<const Eigen::MatrixXd>& z) const;

private:
    Eigen::Index count_;
    RawFunction raw_;
    std::string description_;
    bool normalized_ = false;
    Eigen::VectorXd mean_;
    Eigen::VectorXd sd_;
};

/// First covariate column that is not constant over the given rows.
/// Throws ValidationError when every column is constant.
Eigen::Index first_varying_covariate(const Eigen::Ref<const Eigen::MatrixXd>& z);

/// Unnormalized default weights for d covariates: H_2, ..., H_{R+1} of
/// `column`, then products z_a z_b of the `varying` columns (a < b) once the
/// degree table is exhausted.
WeightFunctionSet hermite_weight_functions(Eigen::Index r_weights, Eigen::Index column,
                                           std::vector<Eigen::Index> varying = {});

/// Unnormalized default weights for a control sample: Hermite terms of the
/// first varying covariate, then products of the varying covariates.
WeightFunctionSet default_weight_functions(Eigen::Index r_weights,
                                           const Eigen::Ref<const Eigen::MatrixXd>& control_z);

/// Default weights for a panel, standardized over its control units.
WeightFunctionSet hermite_weights(Eigen::Index r_weights, const PanelData& panel);

}  // namespace shortpanel
