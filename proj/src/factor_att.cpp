#include "shortpanel/factor_att.hpp"

#include "shortpanel/errors.hpp"
#include "shortpanel/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace shortpanel {

Eigen::MatrixXd BetaHat::pre_block() const {
    Eigen::MatrixXd out(coefficients.rows(), t0);
    for (int k = 0; k < t0; ++k) out.col(k) = coefficients.col(t0 - 1 - k);
    return out;
}

Eigen::VectorXd ResidualizedPanel::pre(Eigen::Index unit) const {
    Eigen::VectorXd out(t0);
    for (int k = 0; k < t0; ++k) out(k) = xi(unit, t0 - 1 - k);
    return out;
}

Eigen::VectorXd MomentSet::post(int period) const {
    if (period < 0 || period > t1())
        throw ValidationError("post period " + std::to_string(period) + " outside [0, " +
                              std::to_string(t1()) + "]");
    return omega_post.col(period);
}

void validate_config(const EstimatorConfig& config) {
    if (config.r_weights < 1) throw ValidationError("R must be at least 1");
    if (config.weight_functions && config.weight_functions->count() != config.r_weights)
        throw ValidationError("custom weight functions must provide exactly R functions");
    if (config.variant == Variant::ridge && !config.delta_rule)
        throw ValidationError("ridge variant requires a delta rule (value, cv or gcv)");
    if (config.variant == Variant::pinv && config.delta_rule)
        throw ValidationError("pinv variant does not take a delta rule");
    if (config.delta_rule) {
        if (const auto* fixed = std::get_if<FixedDelta>(&*config.delta_rule)) {
            if (!(fixed->value > 0.0) || !std::isfinite(fixed->value))
                throw ValidationError("fixed delta must be a positive finite number");
        }
        if (std::holds_alternative<GeneralizedCrossValidation>(*config.delta_rule) && config.r_weights < 2)
            throw ValidationError("GCV needs R >= 2");
    }
    if (config.rank_tol && !(*config.rank_tol >= 0.0))
        throw ValidationError("rank tolerance must be nonnegative");
    if (config.weighting) {
        const auto& w = *config.weighting;
        if (w.rows() != config.r_weights || w.cols() != config.r_weights)
            throw ValidationError("weighting matrix must be R x R");
        (void)linalg::psd_sqrt(w);  // symmetry / PSD check
    }
}

Eigen::MatrixXd weighting_matrix(const EstimatorConfig& config) {
    if (config.weighting) return *config.weighting;
    return Eigen::MatrixXd::Identity(config.r_weights, config.r_weights);
}

std::string to_string(Variant v) { return v == Variant::pinv ? "pinv" : "ridge"; }

std::string to_string(const DeltaRule& rule) {
    if (const auto* fixed = std::get_if<FixedDelta>(&rule)) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", fixed->value);
        return buf;
    }
    return std::holds_alternative<CrossValidation>(rule) ? "cv" : "gcv";
}

BetaHat fit_beta(const Eigen::Ref<const Eigen::MatrixXd>& zc, const Eigen::Ref<const Eigen::MatrixXd>& yc,
                 int t0) {
    if (zc.rows() != yc.rows()) throw ValidationError("covariate and outcome rows differ");
    if (zc.rows() == 0) throw ValidationError("no control units");
    const double n0 = static_cast<double>(zc.rows());
    const Eigen::MatrixXd gram = (zc.transpose() * zc) / n0;
    BetaHat beta;
    beta.t0 = t0;
    beta.gram_condition = gram_condition_number(zc);
    if (!(beta.gram_condition <= kCollinearityThreshold)) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "singular control covariate Gram matrix (condition number %.3g exceeds %.0e)",
                      beta.gram_condition, kCollinearityThreshold);
        throw NumericalError(buf);
    }
    const Eigen::MatrixXd cross = (zc.transpose() * yc) / n0;
    beta.coefficients = gram.ldlt().solve(cross);
    return beta;
}

BetaHat estimate_beta(const PanelData& panel) {
    return fit_beta(panel.control_covariates(), panel.control_outcomes(), panel.t0());
}

ResidualizedPanel residualize(const PanelData& panel, const BetaHat& beta) {
    if (beta.coefficients.rows() != panel.n_covariates() || beta.coefficients.cols() != panel.n_periods() ||
        beta.t0 != panel.t0())
        throw ValidationError("beta dimensions do not match the panel");
    ResidualizedPanel out;
    out.t0 = panel.t0();
    out.xi = panel.outcomes() - panel.covariates() * beta.coefficients;
    return out;
}

namespace {

MomentSet moments_from(const Eigen::Ref<const Eigen::MatrixXd>& omega,  // N0 x R
                       const Eigen::Ref<const Eigen::MatrixXd>& xi,     // N0 x T, calendar order
                       int t0) {
    const double n0 = static_cast<double>(omega.rows());
    const Eigen::MatrixXd cross = (omega.transpose() * xi) / n0;  // R x T calendar order
    MomentSet m;
    m.omega_pre.resize(cross.rows(), t0);
    for (int k = 0; k < t0; ++k) m.omega_pre.col(k) = cross.col(t0 - 1 - k);
    m.omega_post = cross.rightCols(cross.cols() - t0);
    m.singular_values = linalg::svd(m.omega_pre).singular_values;
    return m;
}

}  // namespace

MomentSet build_moments(const ResidualizedPanel& resid, const WeightFunctionSet& weights,
                        const PanelData& panel) {
    if (resid.xi.rows() != panel.n_units() || resid.xi.cols() != panel.n_periods())
        throw ValidationError("residual dimensions do not match the panel");
    const Eigen::MatrixXd omega = weights.evaluate_matrix(panel.control_covariates());
    return moments_from(omega, resid.xi.bottomRows(panel.n_controls()), panel.t0());
}

ControlFit fit_controls(const Eigen::Ref<const Eigen::MatrixXd>& zc,
                        const Eigen::Ref<const Eigen::MatrixXd>& yc, int t0,
                        const WeightFunctionSet& raw_weights) {
    BetaHat beta = fit_beta(zc, yc, t0);
    WeightFunctionSet weights = raw_weights.normalized_over(zc);
    const Eigen::MatrixXd xi = yc - zc * beta.coefficients;
    MomentSet moments = moments_from(weights.evaluate_matrix(zc), xi, t0);
    return ControlFit{std::move(beta), std::move(weights), std::move(moments)};
}

WeightedMoments::WeightedMoments(const MomentSet& moments, const Eigen::MatrixXd& w) {
    if (w.rows() != moments.r() || w.cols() != moments.r())
        throw ValidationError("weighting matrix must be R x R");
    w_sqrt_ = linalg::psd_sqrt(w);
    weighted_pre_ = w_sqrt_ * moments.omega_pre;
    weighted_post_ = w_sqrt_ * moments.omega_post;
    factors_ = linalg::svd(weighted_pre_);
}

Eigen::VectorXd WeightedMoments::target(int period) const {
    if (period < 0 || period >= weighted_post_.cols())
        throw ValidationError("post period " + std::to_string(period) + " out of range");
    return weighted_post_.col(period);
}

Eigen::VectorXd WeightedMoments::solve_pinv(int period, std::optional<double> rank_tol) const {
    const Eigen::VectorXd b = target(period);
    const double tol = rank_tol.value_or(linalg::default_rank_tol(weighted_pre_.rows(), weighted_pre_.cols()));
    const auto& f = factors_;
    const Eigen::Index q = linalg::numerical_rank(f.singular_values, tol);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(weighted_pre_.cols());
    for (Eigen::Index j = 0; j < q; ++j)
        x += f.v.col(j) * (f.u.col(j).dot(b) / f.singular_values(j));
    return x;
}

Eigen::VectorXd WeightedMoments::solve_ridge(int period, double delta) const {
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw ValidationError("ridge parameter must be a positive finite number");
    const Eigen::VectorXd b = target(period);
    const auto& f = factors_;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(weighted_pre_.cols());
    for (Eigen::Index j = 0; j < f.singular_values.size(); ++j) {
        const double s = f.singular_values(j);
        if (s == 0.0) continue;
        x += f.v.col(j) * (s * f.u.col(j).dot(b) / (s * s + delta));
    }
    return x;
}

FStarFit f_star_pinv(const MomentSet& moments, const Eigen::MatrixXd& w, int period,
                     std::optional<double> rank_tol) {
    const WeightedMoments wm(moments, w);
    FStarFit fit;
    fit.f_star = wm.solve_pinv(period, rank_tol);
    fit.singular_values = wm.singular_values();
    const double tol = rank_tol.value_or(linalg::default_rank_tol(moments.r(), moments.t0()));
    fit.numerical_rank = linalg::numerical_rank(fit.singular_values, tol);
    const Eigen::Index full = std::min<Eigen::Index>(moments.r(), moments.t0());
    if (fit.numerical_rank < full) {
        std::string msg = "W^{1/2} Omega has numerical rank " + std::to_string(fit.numerical_rank) +
                          " < min(R, T0) = " + std::to_string(full) +
                          "; pseudoinverse may be unstable, consider the ridge variant. singular values:";
        char buf[32];
        for (Eigen::Index j = 0; j < fit.singular_values.size(); ++j) {
            std::snprintf(buf, sizeof buf, " %.3e", fit.singular_values(j));
            msg += buf;
        }
        fit.warnings.push_back(std::move(msg));
    }
    return fit;
}

Eigen::VectorXd f_star_ridge(const MomentSet& moments, const Eigen::MatrixXd& w, double delta, int period) {
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw ValidationError("ridge parameter must be a positive finite number");
    return WeightedMoments(moments, w).solve_ridge(period, delta);
}

double counterfactual(const PanelData& panel, const BetaHat& beta, const Eigen::VectorXd& f_star, int period) {
    if (f_star.size() != panel.t0())
        throw ValidationError("F* has length " + std::to_string(f_star.size()) + ", expected T0 = " +
                              std::to_string(panel.t0()));
    if (period < 0 || period > panel.t1())
        throw ValidationError("counterfactual period must be a post period");
    if (beta.coefficients.rows() != panel.n_covariates() || beta.t0 != panel.t0() ||
        beta.coefficients.cols() != panel.n_periods())
        throw ValidationError("beta dimensions do not match the panel");
    const Eigen::VectorXd z0 = panel.covariates().row(0).transpose();
    const Eigen::VectorXd pre_resid = panel.pre_outcomes(0) - beta.pre_block().transpose() * z0;
    return f_star.dot(pre_resid) + beta.at(period).dot(z0);
}

WeightFunctionSet raw_weight_functions(const PanelData& panel, const EstimatorConfig& config) {
    if (config.weight_functions) return *config.weight_functions;
    return default_weight_functions(config.r_weights, panel.control_covariates());
}

namespace {

void check_estimable(const PanelData& panel, const EstimatorConfig& config) {
    validate_config(config);
    if (panel.n_treated() != 1) throw ValidationError("exactly one treated unit required");
    const Eigen::Index need =
        std::max({panel.n_covariates(), config.r_weights, static_cast<Eigen::Index>(panel.t0())}) + 1;
    if (panel.n_controls() < need)
        throw ValidationError("need at least " + std::to_string(need) + " control units (max(d, R, T0) + 1), have " +
                              std::to_string(panel.n_controls()));
}

}  // namespace

EstimateResult estimate_att(const PanelData& panel, const EstimatorConfig& config) {
    check_estimable(panel, config);

    const WeightFunctionSet raw = raw_weight_functions(panel, config);
    const ControlFit fit = fit_controls(panel.control_covariates(), panel.control_outcomes(), panel.t0(), raw);
    const Eigen::MatrixXd w = weighting_matrix(config);
    const WeightedMoments wm(fit.moments, w);

    EstimateResult result;
    auto& diag = result.diagnostics;
    diag.singular_values = wm.singular_values();
    const double tol = config.rank_tol.value_or(linalg::default_rank_tol(fit.moments.r(), fit.moments.t0()));
    diag.numerical_rank = linalg::numerical_rank(diag.singular_values, tol);
    diag.gram_condition = fit.beta.gram_condition;
    diag.weights_description = fit.weights.description();
    if (config.variant == Variant::pinv &&
        diag.numerical_rank < std::min<Eigen::Index>(fit.moments.r(), fit.moments.t0())) {
        diag.warnings.push_back("W^{1/2} Omega is rank deficient (numerical rank " +
                                std::to_string(diag.numerical_rank) +
                                "); the ridge variant is recommended when R > r and T0 > r");
    }

    const int n_post = panel.t1() + 1;
    result.observed.resize(n_post);
    result.counterfactual.resize(n_post);
    result.att.resize(n_post);
    result.f_star.resize(panel.t0(), n_post);

    std::optional<DeltaGrid> grid;
    for (int t = 0; t <= panel.t1(); ++t) {
        result.periods.push_back(t);
        Eigen::VectorXd f;
        if (config.variant == Variant::pinv) {
            f = wm.solve_pinv(t, config.rank_tol);
        } else {
            double delta = 0.0;
            const DeltaRule& rule = *config.delta_rule;
            if (const auto* fixed = std::get_if<FixedDelta>(&rule)) {
                delta = fixed->value;
            } else {
                if (!grid) {
                    const double anchor = wm.matrix().squaredNorm() / panel.t0();
                    if (anchor > 0.0) {
                        grid = delta_grid_from_anchor(anchor);
                    } else {
                        grid = delta_grid_from_anchor(1.0);
                        diag.warnings.push_back("Omega is exactly zero; delta grid anchored at 1");
                    }
                }
                DeltaSelection sel = std::holds_alternative<CrossValidation>(rule)
                                         ? select_delta_cv(panel, config, t, *grid)
                                         : select_delta_gcv(fit.moments, w, t, panel.n_controls(), *grid);
                delta = sel.chosen;
                for (const auto& msg : sel.warnings) diag.warnings.push_back(msg);
                result.delta_selections.push_back(std::move(sel));
            }
            result.delta_used.push_back(delta);
            f = wm.solve_ridge(t, delta);
        }
        result.f_star.col(t) = f;
        result.observed(t) = panel.outcome(0, t);
        result.counterfactual(t) = counterfactual(panel, fit.beta, f, t);
        result.att(t) = result.observed(t) - result.counterfactual(t);
    }
    return result;
}

InspectReport inspect_panel(const PanelData& panel, const EstimatorConfig& config) {
    check_estimable(panel, config);
    const WeightFunctionSet raw = raw_weight_functions(panel, config);
    const ControlFit fit = fit_controls(panel.control_covariates(), panel.control_outcomes(), panel.t0(), raw);
    const Eigen::MatrixXd w = weighting_matrix(config);
    const WeightedMoments wm(fit.moments, w);

    InspectReport report;
    report.singular_values = wm.singular_values();
    const double tol = config.rank_tol.value_or(linalg::default_rank_tol(fit.moments.r(), fit.moments.t0()));
    report.numerical_rank = linalg::numerical_rank(report.singular_values, tol);
    report.gram_condition = fit.beta.gram_condition;

    const Eigen::MatrixXd xi = panel.control_outcomes() - panel.control_covariates() * fit.beta.coefficients;
    const double rms = std::sqrt(xi.leftCols(panel.t0()).squaredNorm() / static_cast<double>(xi.rows() * panel.t0()));
    const double w_scale = linalg::spectral_norm(linalg::psd_sqrt(w));
    report.noise_floor = w_scale * rms *
                         (std::sqrt(static_cast<double>(fit.moments.r())) + std::sqrt(static_cast<double>(panel.t0()))) /
                         std::sqrt(static_cast<double>(panel.n_controls()));

    const Eigen::Index k = std::min<Eigen::Index>(fit.moments.r(), fit.moments.t0());
    const double sigma_k = report.singular_values.size() >= k ? report.singular_values(k - 1) : 0.0;
    const double sigma_1 = report.singular_values.size() > 0 ? report.singular_values(0) : 0.0;
    char buf[200];
    if (report.numerical_rank < k) {
        report.suggested = Variant::ridge;
        std::snprintf(buf, sizeof buf, "numerical rank %ld < min(R, T0) = %ld", static_cast<long>(report.numerical_rank),
                      static_cast<long>(k));
    } else if (sigma_k <= report.noise_floor) {
        report.suggested = Variant::ridge;
        std::snprintf(buf, sizeof buf, "sigma_%ld = %.3e is within the noise floor %.3e (sigma_%ld/sigma_1 = %.3e)",
                      static_cast<long>(k), sigma_k, report.noise_floor, static_cast<long>(k),
                      sigma_1 > 0 ? sigma_k / sigma_1 : 0.0);
    } else {
        report.suggested = Variant::pinv;
        std::snprintf(buf, sizeof buf, "sigma_%ld = %.3e clears the noise floor %.3e (sigma_%ld/sigma_1 = %.3e)",
                      static_cast<long>(k), sigma_k, report.noise_floor, static_cast<long>(k), sigma_k / sigma_1);
    }
    report.reason = buf;
    return report;
}

}  // namespace shortpanel
