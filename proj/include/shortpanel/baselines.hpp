#pragma once

#include "shortpanel/panel.hpp"

#include <Eigen/Dense>

#include <vector>

namespace shortpanel {

/// Two-way fixed-effects DID without covariates, for t = 0..T1:
///   (Y_0t - mean_{s<0} Y_0s) - mean_controls (Y_it - mean_{s<0} Y_is).
/// Requires exactly one treated unit.
Eigen::VectorXd did_att(const PanelData& panel);

enum class PredictorKind {
    all_lags,                 // SCM-I: Y_{-1}, ..., Y_{-T0}
    half_lags_and_covariates  // SCM-II: every second lag from -1, plus covariates
};

struct PredictorSpec {
    PredictorKind kind = PredictorKind::all_lags;
    /// Lag spacing for half_lags_and_covariates (2: lags -1, -3, -5, ...).
    int lag_stride = 2;
};

/// Predictor matrix for synthetic control, each row standardized by its
/// control-unit sample sd. Rows that are constant over controls (e.g. an
/// intercept covariate) are dropped.
struct ScPredictors {
    Eigen::VectorXd treated;   // P
    Eigen::MatrixXd controls;  // P x N0
    std::vector<std::string> labels;
};

ScPredictors build_predictors(const PanelData& panel, const PredictorSpec& spec);

struct ScWeights {
    Eigen::VectorXd weights;  // length N0, on the probability simplex
    double objective = 0.0;   // |x_0 - X_c w|^2 at the returned weights
    double duality_gap = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;  // after each major iteration
};

inline constexpr int kScMaxIterations = 10000;
inline constexpr double kScGapTolerance = 1e-10;

/// min |target - columns * w|^2 over the probability simplex, by the
/// fully-corrective Frank-Wolfe method (Wolfe's minimum-norm-point
/// algorithm). Stops when the Frank-Wolfe duality gap is below `gap_tol`
/// or after `max_iterations` major iterations (converged = false).
ScWeights simplex_least_squares(const Eigen::Ref<const Eigen::MatrixXd>& columns,
                                const Eigen::Ref<const Eigen::VectorXd>& target,
                                int max_iterations = kScMaxIterations, double gap_tol = kScGapTolerance);

ScWeights sc_weights(const PanelData& panel, const PredictorSpec& spec);

struct ScEstimate {
    Eigen::VectorXd att;  // t = 0..T1
    ScWeights weights;
};

/// ATT_t = Y_0t - sum_i w_i Y_it. Solver non-convergence is carried in
/// weights.converged rather than thrown.
ScEstimate sc_att(const PanelData& panel, const PredictorSpec& spec);

}  // namespace shortpanel
