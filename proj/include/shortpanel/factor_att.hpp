#pragma once

#include "shortpanel/linalg.hpp"
#include "shortpanel/panel.hpp"
#include "shortpanel/types.hpp"
#include "shortpanel/weights.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace shortpanel {

/// Per-period OLS of Y_it on Z_i over control units (all periods, since
/// controls stay untreated). Throws NumericalError when the control Gram
/// matrix has condition number above kCollinearityThreshold.
BetaHat estimate_beta(const PanelData& panel);

/// xi_it = Y_it - beta_t' Z_i for every unit and period.
ResidualizedPanel residualize(const PanelData& panel, const BetaHat& beta);

/// Omega (R x T0) and Omega_t (t = 0..T1): control-unit averages of
/// omega_j(Z_i) * xi_it, using weights.evaluate_matrix on the control rows.
MomentSet build_moments(const ResidualizedPanel& resid, const WeightFunctionSet& weights,
                        const PanelData& panel);

struct FStarFit {
    Eigen::VectorXd f_star;
    Eigen::VectorXd singular_values;  // of W^{1/2} Omega
    Eigen::Index numerical_rank = 0;
    std::vector<std::string> warnings;
};

/// (W^{1/2} Omega)^+ W^{1/2} Omega_t. Warns (does not fail) when the
/// numerical rank of W^{1/2} Omega is below min(R, T0).
FStarFit f_star_pinv(const MomentSet& moments, const Eigen::MatrixXd& w, int period,
                     std::optional<double> rank_tol = std::nullopt);

/// (Omega' W Omega + delta I)^{-1} Omega' W Omega_t, the minimizer of
/// (Omega_t - Omega f)' W (Omega_t - Omega f) + delta |f|^2.
Eigen::VectorXd f_star_ridge(const MomentSet& moments, const Eigen::MatrixXd& w, double delta,
                             int period);

/// F*_t' (Y_{0,pre} - B' Z_0) + beta_t' Z_0 for the treated unit (unit 0).
double counterfactual(const PanelData& panel, const BetaHat& beta, const Eigen::VectorXd& f_star,
                      int period);

/// Full pipeline for one treated unit: beta, residuals, moments, delta
/// selection (ridge), F*_t and the counterfactual for t = 0..T1.
EstimateResult estimate_att(const PanelData& panel, const EstimatorConfig& config);

// Lower-level pieces, shared with the leave-one-out tuning code.

/// W^{1/2} Omega with a cached SVD, so F*_t can be solved for many periods
/// and ridge parameters.
class WeightedMoments {
public:
    WeightedMoments(const MomentSet& moments, const Eigen::MatrixXd& w);

    const Eigen::MatrixXd& matrix() const { return weighted_pre_; }
    const linalg::SvdFactors& factors() const { return factors_; }
    const Eigen::VectorXd& singular_values() const { return factors_.singular_values; }
    /// W^{1/2} Omega_t.
    Eigen::VectorXd target(int period) const;

    Eigen::VectorXd solve_pinv(int period, std::optional<double> rank_tol = std::nullopt) const;
    Eigen::VectorXd solve_ridge(int period, double delta) const;

private:
    Eigen::MatrixXd w_sqrt_;
    Eigen::MatrixXd weighted_pre_;
    Eigen::MatrixXd weighted_post_;
    linalg::SvdFactors factors_;
};

/// beta for periods in calendar order from control rows only.
BetaHat fit_beta(const Eigen::Ref<const Eigen::MatrixXd>& zc, const Eigen::Ref<const Eigen::MatrixXd>& yc,
                 int t0);

/// Moments for a bare control sample. `raw_weights` are standardized over zc.
struct ControlFit {
    BetaHat beta;
    WeightFunctionSet weights;
    MomentSet moments;
};
ControlFit fit_controls(const Eigen::Ref<const Eigen::MatrixXd>& zc,
                        const Eigen::Ref<const Eigen::MatrixXd>& yc, int t0,
                        const WeightFunctionSet& raw_weights);

/// Unnormalized weight functions used for a panel under a configuration.
WeightFunctionSet raw_weight_functions(const PanelData& panel, const EstimatorConfig& config);

/// Rank report for the `inspect` command.
struct InspectReport {
    Eigen::VectorXd singular_values;  // of W^{1/2} Omega
    Eigen::Index numerical_rank = 0;
    double gram_condition = 0.0;
    /// Rough sampling-noise level of the singular values:
    /// |W^{1/2}|_2 * rms(xi_pre) * (sqrt(R) + sqrt(T0)) / sqrt(N0).
    double noise_floor = 0.0;
    Variant suggested = Variant::ridge;
    std::string reason;
};

/// Suggests pinv only when sigma_{min(R,T0)} clears both the numerical-rank
/// cutoff and the noise floor.
InspectReport inspect_panel(const PanelData& panel, const EstimatorConfig& config);

}  // namespace shortpanel
