#pragma once

#include "shortpanel/factor_att.hpp"
#include "shortpanel/panel.hpp"
#include "shortpanel/types.hpp"

#include <Eigen/Dense>

namespace shortpanel {

inline constexpr int kDeltaGridPoints = 30;
inline constexpr double kDeltaGridLow = 1e-6;   // relative to the anchor
inline constexpr double kDeltaGridHigh = 1e2;   // relative to the anchor
/// Leave-one-out CV fails when more than this share of folds is skipped.
inline constexpr double kMaxSkippedFoldShare = 0.2;

/// 30 log-spaced values from 1e2 * anchor down to 1e-6 * anchor, with
/// anchor = trace(Omega' W Omega) / T0. Throws NumericalError if Omega = 0.
DeltaGrid delta_grid(const MomentSet& moments, const Eigen::MatrixXd& w);
DeltaGrid delta_grid_from_anchor(double anchor);

/// Delete-one cross-validation over control units. Fold i refits beta, xi,
/// the weight standardization and the moments without unit i, then scores
/// (xi_it - F_t^{(-i)}' xi_{i,pre})^2 with unit i's residuals taken from the
/// leave-one-out beta. Folds with a singular Gram matrix are skipped; more
/// than 20% skipped throws NumericalError. Ties go to the smallest delta.
DeltaSelection select_delta_cv(const PanelData& panel, const EstimatorConfig& config, int period);
DeltaSelection select_delta_cv(const PanelData& panel, const EstimatorConfig& config, int period,
                               const DeltaGrid& grid);

/// GCV(delta) = |W^{1/2}(Omega_t - Omega F)|^2 / (1 - tr(H_delta)/R)^2 with
/// H_delta = W^{1/2} Omega (Omega' W Omega + delta I)^{-1} Omega' W^{1/2};
/// a delta with tr(H_delta) >= R scores +inf. Requires R >= 2.
DeltaSelection select_delta_gcv(const MomentSet& moments, const Eigen::MatrixXd& w, int period,
                                Eigen::Index n_controls);
DeltaSelection select_delta_gcv(const MomentSet& moments, const Eigen::MatrixXd& w, int period,
                                Eigen::Index n_controls, const DeltaGrid& grid);

/// Single GCV evaluation (exposed for tests and diagnostics).
double gcv_score(const WeightedMoments& weighted, int period, double delta);

}  // namespace shortpanel
