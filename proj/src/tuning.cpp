#include "shortpanel/tuning.hpp"

#include "shortpanel/errors.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace shortpanel {

DeltaGrid delta_grid_from_anchor(double anchor) {
    if (!(anchor > 0.0) || !std::isfinite(anchor))
        throw NumericalError("delta grid anchor must be positive and finite");
    DeltaGrid grid;
    grid.scale_anchor = anchor;
    grid.values.resize(kDeltaGridPoints);
    const double hi = std::log10(kDeltaGridHigh);
    const double lo = std::log10(kDeltaGridLow);
    for (int k = 0; k < kDeltaGridPoints; ++k) {
        const double e = hi + (lo - hi) * k / (kDeltaGridPoints - 1);
        grid.values[static_cast<std::size_t>(k)] = anchor * std::pow(10.0, e);
    }
    // Endpoints exactly anchor * {1e2, 1e-6}.
    grid.values.front() = anchor * kDeltaGridHigh;
    grid.values.back() = anchor * kDeltaGridLow;
    return grid;
}

DeltaGrid delta_grid(const MomentSet& moments, const Eigen::MatrixXd& w) {
    const WeightedMoments wm(moments, w);
    const double anchor = wm.matrix().squaredNorm() / moments.t0();
    if (!(anchor > 0.0)) throw NumericalError("moment matrix Omega is zero; cannot anchor the delta grid");
    return delta_grid_from_anchor(anchor);
}

namespace {

// Grid is descending, so scanning forward and accepting near-equal scores
// moves the choice to the smallest delta among ties.
void pick_minimum(DeltaSelection& sel, double tie_tol) {
    double best = std::numeric_limits<double>::infinity();
    for (double s : sel.scores) best = std::min(best, s);
    if (!std::isfinite(best)) throw NumericalError("no finite tuning score on the delta grid");
    for (std::size_t k = 0; k < sel.scores.size(); ++k)
        if (sel.scores[k] <= best + tie_tol) sel.chosen = sel.grid[k];
}

DeltaGrid grid_for(const MomentSet& moments, const Eigen::MatrixXd& w, std::vector<std::string>& warnings) {
    const WeightedMoments wm(moments, w);
    const double anchor = wm.matrix().squaredNorm() / moments.t0();
    if (anchor > 0.0) return delta_grid_from_anchor(anchor);
    warnings.push_back("Omega is exactly zero; delta grid anchored at 1");
    return delta_grid_from_anchor(1.0);
}

Eigen::MatrixXd drop_row(const Eigen::Ref<const Eigen::MatrixXd>& m, Eigen::Index row) {
    Eigen::MatrixXd out(m.rows() - 1, m.cols());
    out.topRows(row) = m.topRows(row);
    out.bottomRows(m.rows() - 1 - row) = m.bottomRows(m.rows() - 1 - row);
    return out;
}

}  // namespace

DeltaSelection select_delta_cv(const PanelData& panel, const EstimatorConfig& config, int period) {
    const WeightFunctionSet raw = raw_weight_functions(panel, config);
    const ControlFit fit = fit_controls(panel.control_covariates(), panel.control_outcomes(), panel.t0(), raw);
    std::vector<std::string> warnings;
    DeltaGrid grid = grid_for(fit.moments, weighting_matrix(config), warnings);
    DeltaSelection sel = select_delta_cv(panel, config, period, grid);
    sel.warnings.insert(sel.warnings.begin(), warnings.begin(), warnings.end());
    return sel;
}

DeltaSelection select_delta_cv(const PanelData& panel, const EstimatorConfig& config, int period,
                               const DeltaGrid& grid) {
    if (panel.n_controls() < 3) throw ValidationError("delete-one cross-validation needs at least 3 control units");
    if (period < 0 || period > panel.t1()) throw ValidationError("CV period must be a post period");
    const Eigen::MatrixXd zc = panel.control_covariates();
    const Eigen::MatrixXd yc = panel.control_outcomes();
    const Eigen::MatrixXd w = weighting_matrix(config);
    const WeightFunctionSet raw = raw_weight_functions(panel, config);
    const int t0 = panel.t0();
    const Eigen::Index n0 = zc.rows();

    DeltaSelection sel;
    sel.rule = TuningRule::cv;
    sel.grid = grid.values;
    std::vector<double> sums(grid.values.size(), 0.0);
    Eigen::Index used = 0;

    for (Eigen::Index i = 0; i < n0; ++i) {
        const Eigen::MatrixXd z_fold = drop_row(zc, i);
        const Eigen::MatrixXd y_fold = drop_row(yc, i);
        std::optional<ControlFit> fold;
        try {
            fold.emplace(fit_controls(z_fold, y_fold, t0, raw));
        } catch (const NumericalError& e) {
            ++sel.skipped_units;
            sel.warnings.push_back("CV fold " + std::to_string(i) + " skipped: " + e.what());
            continue;
        }
        const Eigen::VectorXd xi_i = yc.row(i).transpose() - fold->beta.coefficients.transpose() * zc.row(i).transpose();
        Eigen::VectorXd xi_pre(t0);
        for (int k = 0; k < t0; ++k) xi_pre(k) = xi_i(t0 - 1 - k);
        const double target = xi_i(t0 + period);

        const WeightedMoments wm(fold->moments, w);
        for (std::size_t k = 0; k < grid.values.size(); ++k) {
            const Eigen::VectorXd f = wm.solve_ridge(period, grid.values[k]);
            const double err = target - f.dot(xi_pre);
            sums[k] += err * err;
        }
        ++used;
    }
    if (static_cast<double>(sel.skipped_units) > kMaxSkippedFoldShare * static_cast<double>(n0) || used == 0)
        throw NumericalError("cross-validation skipped " + std::to_string(sel.skipped_units) + " of " +
                             std::to_string(n0) + " folds (singular leave-one-out fits)");

    sel.scores.resize(sums.size());
    for (std::size_t k = 0; k < sums.size(); ++k) sel.scores[k] = sums[k] / static_cast<double>(used);

    // Scores are squared outcome-scale residuals; differences below
    // (1e-12 * max|Y|)^2 are rounding noise.
    const double scale = yc.cwiseAbs().maxCoeff();
    pick_minimum(sel, (1e-12 * scale) * (1e-12 * scale));
    return sel;
}

double gcv_score(const WeightedMoments& weighted, int period, double delta) {
    const Eigen::Index r = weighted.matrix().rows();
    const Eigen::VectorXd b = weighted.target(period);
    const Eigen::VectorXd f = weighted.solve_ridge(period, delta);
    const Eigen::VectorXd resid = b - weighted.matrix() * f;
    double trace = 0.0;
    for (Eigen::Index j = 0; j < weighted.singular_values().size(); ++j) {
        const double s2 = weighted.singular_values()(j) * weighted.singular_values()(j);
        trace += s2 / (s2 + delta);
    }
    if (trace >= static_cast<double>(r)) return std::numeric_limits<double>::infinity();
    const double denom = 1.0 - trace / static_cast<double>(r);
    return resid.squaredNorm() / (denom * denom);
}

DeltaSelection select_delta_gcv(const MomentSet& moments, const Eigen::MatrixXd& w, int period,
                                Eigen::Index n_controls) {
    std::vector<std::string> warnings;
    DeltaGrid grid = grid_for(moments, w, warnings);
    DeltaSelection sel = select_delta_gcv(moments, w, period, n_controls, grid);
    sel.warnings.insert(sel.warnings.begin(), warnings.begin(), warnings.end());
    return sel;
}

DeltaSelection select_delta_gcv(const MomentSet& moments, const Eigen::MatrixXd& w, int period,
                                Eigen::Index n_controls, const DeltaGrid& grid) {
    if (moments.r() < 2) throw ValidationError("GCV needs R >= 2");
    if (n_controls < 2) throw ValidationError("GCV needs at least 2 control units");
    const WeightedMoments wm(moments, w);
    DeltaSelection sel;
    sel.rule = TuningRule::gcv;
    sel.grid = grid.values;
    sel.scores.reserve(grid.values.size());
    for (double delta : grid.values) sel.scores.push_back(gcv_score(wm, period, delta));
    const double scale = std::max(wm.matrix().squaredNorm(), wm.target(period).squaredNorm());
    pick_minimum(sel, 1e-24 * scale);
    return sel;
}

}  // namespace shortpanel
