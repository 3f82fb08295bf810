#pragma once

#include "shortpanel/weights.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace shortpanel {

// Pre-period vectors and matrices share one ordering: index k <-> period -(k+1),
// so index 0 is t = -1 and index T0-1 is t = -T0.

/// First-stage coefficients beta_t for every period, from control units only.
struct BetaHat {
    Eigen::MatrixXd coefficients;  // d x (T0 + T1 + 1), calendar order
    int t0 = 0;
    double gram_condition = 0.0;

    Eigen::VectorXd at(int period) const { return coefficients.col(period + t0); }
    /// (beta_{-1}, ..., beta_{-T0}) as a d x T0 matrix.
    Eigen::MatrixXd pre_block() const;
};

/// xi_it = Y_it - beta_t' Z_i for all units. The treated unit's post-period
/// residuals include the treatment effect.
struct ResidualizedPanel {
    Eigen::MatrixXd xi;  // N x (T0 + T1 + 1), calendar order, same unit order as the panel
    int t0 = 0;

    /// (xi_{i,-1}, ..., xi_{i,-T0}).
    Eigen::VectorXd pre(Eigen::Index unit) const;
    double at(Eigen::Index unit, int period) const { return xi(unit, period + t0); }
};

/// Sample moments between omega(Z_i) and residualized outcomes over controls.
struct MomentSet {
    Eigen::MatrixXd omega_pre;   // R x T0; column k holds period -(k+1)
    Eigen::MatrixXd omega_post;  // R x (T1 + 1); column t holds period t
    Eigen::VectorXd singular_values;  // of omega_pre (identity weighting)

    Eigen::Index r() const { return omega_pre.rows(); }
    int t0() const { return static_cast<int>(omega_pre.cols()); }
    int t1() const { return static_cast<int>(omega_post.cols()) - 1; }
    Eigen::VectorXd post(int period) const;
};

enum class Variant { pinv, ridge };

struct FixedDelta {
    double value = 0.0;
};
struct CrossValidation {};
struct GeneralizedCrossValidation {};
using DeltaRule = std::variant<FixedDelta, CrossValidation, GeneralizedCrossValidation>;

struct EstimatorConfig {
    Variant variant = Variant::pinv;
    Eigen::Index r_weights = 2;
    /// R x R symmetric PSD weighting matrix; identity when empty.
    std::optional<Eigen::MatrixXd> weighting;
    /// Required for ridge, forbidden for pinv.
    std::optional<DeltaRule> delta_rule;
    /// Relative singular-value cutoff for the pseudoinverse.
    std::optional<double> rank_tol;
    /// Unnormalized weight functions overriding the Hermite default; they are
    /// standardized over the controls of each sample they are applied to.
    std::optional<WeightFunctionSet> weight_functions;
};

/// Throws ValidationError on an inconsistent configuration.
void validate_config(const EstimatorConfig& config);

/// The configured W, or I_R.
Eigen::MatrixXd weighting_matrix(const EstimatorConfig& config);

std::string to_string(Variant v);
std::string to_string(const DeltaRule& rule);

enum class TuningRule { cv, gcv };

/// Log-spaced candidate values for the ridge parameter, largest first.
struct DeltaGrid {
    std::vector<double> values;
    double scale_anchor = 0.0;  // trace(Omega' W Omega) / T0
};

struct DeltaSelection {
    TuningRule rule = TuningRule::cv;
    double chosen = 0.0;
    std::vector<double> grid;    // same order as DeltaGrid::values
    std::vector<double> scores;  // scores[k] belongs to grid[k]
    Eigen::Index skipped_units = 0;  // cv only
    std::vector<std::string> warnings;
};

struct EstimateDiagnostics {
    Eigen::VectorXd singular_values;  // of W^{1/2} Omega
    Eigen::Index numerical_rank = 0;
    double gram_condition = 0.0;
    std::string weights_description;
    std::vector<std::string> warnings;
};

struct EstimateResult {
    std::vector<int> periods;        // 0..T1
    Eigen::VectorXd observed;        // Y_{0t}
    Eigen::VectorXd counterfactual;  // estimated Y_{0t}(0)
    Eigen::VectorXd att;             // observed - counterfactual
    Eigen::MatrixXd f_star;          // T0 x (T1 + 1); column t holds F*_t
    std::vector<double> delta_used;  // per period; empty for pinv
    std::vector<DeltaSelection> delta_selections;  // per period; cv/gcv only
    EstimateDiagnostics diagnostics;
};

}  // namespace shortpanel
