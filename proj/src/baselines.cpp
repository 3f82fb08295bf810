#include "shortpanel/baselines.hpp"

#include "shortpanel/errors.hpp"

#include <algorithm>
#include <cmath>

namespace shortpanel {

namespace {

void require_single_treated(const PanelData& panel) {
    if (panel.n_treated() != 1) throw ValidationError("exactly one treated unit required");
}

}  // namespace

Eigen::VectorXd did_att(const PanelData& panel) {
    require_single_treated(panel);
    const int t0 = panel.t0();
    const auto& y = panel.outcomes();
    const Eigen::VectorXd pre_mean = y.leftCols(t0).rowwise().mean();
    Eigen::VectorXd att(panel.t1() + 1);
    const auto controls = panel.control_outcomes();
    const Eigen::VectorXd control_pre = pre_mean.tail(panel.n_controls());
    for (int t = 0; t <= panel.t1(); ++t) {
        const Eigen::Index c = panel.column(t);
        const double treated_change = y(0, c) - pre_mean(0);
        const double control_change = (controls.col(c) - control_pre).mean();
        att(t) = treated_change - control_change;
    }
    return att;
}

ScPredictors build_predictors(const PanelData& panel, const PredictorSpec& spec) {
    require_single_treated(panel);
    if (spec.lag_stride < 1) throw ValidationError("lag stride must be positive");
    std::vector<Eigen::VectorXd> rows;  // each length N (treated first)
    std::vector<std::string> labels;
    const int stride = spec.kind == PredictorKind::all_lags ? 1 : spec.lag_stride;
    for (int lag = 1; lag <= panel.t0(); lag += stride) {
        rows.push_back(panel.outcomes().col(panel.column(-lag)));
        labels.push_back("y[" + std::to_string(-lag) + "]");
    }
    if (spec.kind == PredictorKind::half_lags_and_covariates) {
        for (Eigen::Index k = 0; k < panel.n_covariates(); ++k) {
            rows.push_back(panel.covariates().col(k));
            labels.push_back("z" + std::to_string(k + 1));
        }
    }

    const Eigen::Index n0 = panel.n_controls();
    ScPredictors out;
    std::vector<Eigen::Index> keep;
    std::vector<double> sds;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Eigen::VectorXd c = rows[r].tail(n0);
        const double mean = c.mean();
        const double sd = n0 > 1 ? std::sqrt((c.array() - mean).square().sum() / static_cast<double>(n0 - 1)) : 0.0;
        if (sd > 0.0) {
            keep.push_back(static_cast<Eigen::Index>(r));
            sds.push_back(sd);
        }
    }
    if (keep.empty()) throw ValidationError("no synthetic-control predictor varies across control units");
    const auto p = static_cast<Eigen::Index>(keep.size());
    out.treated.resize(p);
    out.controls.resize(p, n0);
    for (Eigen::Index k = 0; k < p; ++k) {
        const Eigen::VectorXd& row = rows[static_cast<std::size_t>(keep[static_cast<std::size_t>(k)])];
        const double sd = sds[static_cast<std::size_t>(k)];
        out.treated(k) = row(0) / sd;
        out.controls.row(k) = row.tail(n0).transpose() / sd;
        out.labels.push_back(labels[static_cast<std::size_t>(keep[static_cast<std::size_t>(k)])]);
    }
    return out;
}

namespace {

// Minimizer of |P a|^2 subject to sum(a) = 1 (affine hull of the columns).
Eigen::VectorXd affine_minimizer(const Eigen::MatrixXd& points) {
    const Eigen::Index k = points.cols();
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
    kkt.topLeftCorner(k, k) = points.transpose() * points;
    kkt.topRightCorner(k, 1).setOnes();
    kkt.bottomLeftCorner(1, k).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
    rhs(k) = 1.0;
    return kkt.fullPivLu().solve(rhs).head(k);
}

}  // namespace

ScWeights simplex_least_squares(const Eigen::Ref<const Eigen::MatrixXd>& columns,
                                const Eigen::Ref<const Eigen::VectorXd>& target, int max_iterations,
                                double gap_tol) {
    const Eigen::Index n = columns.cols();
    if (n < 1) throw ValidationError("simplex least squares needs at least one column");
    if (columns.rows() != target.size()) throw ValidationError("predictor dimensions disagree");

    // Points p_i = x_i - target; we seek the minimum-norm point of their hull.
    const Eigen::MatrixXd points = columns.colwise() - target;
    const Eigen::VectorXd sq_norms = points.colwise().squaredNorm().transpose();

    std::vector<Eigen::Index> active;
    Eigen::VectorXd lambda(1);
    Eigen::Index start = 0;
    sq_norms.minCoeff(&start);
    active.push_back(start);
    lambda(0) = 1.0;
    Eigen::VectorXd x = points.col(start);

    ScWeights out;
    out.objective_trace.push_back(x.squaredNorm());
    auto active_points = [&]() {
        Eigen::MatrixXd m(points.rows(), static_cast<Eigen::Index>(active.size()));
        for (std::size_t k = 0; k < active.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = points.col(active[k]);
        return m;
    };

    int iter = 0;
    double gap = 0.0;
    for (; iter < max_iterations; ++iter) {
        const Eigen::VectorXd grad_dirs = points.transpose() * x;  // gradient / 2
        Eigen::Index j = 0;
        grad_dirs.minCoeff(&j);
        gap = 2.0 * (x.squaredNorm() - grad_dirs(j));
        if (gap < gap_tol) {
            out.converged = true;
            break;
        }
        if (std::find(active.begin(), active.end(), j) != active.end()) break;  // stalled on rounding
        active.push_back(j);
        lambda.conservativeResize(lambda.size() + 1);
        lambda(lambda.size() - 1) = 0.0;

        // Minor cycle: move toward the affine minimizer, dropping atoms that hit zero.
        for (std::size_t guard = 0; guard <= static_cast<std::size_t>(n) + 1; ++guard) {
            const Eigen::MatrixXd s_points = active_points();
            const Eigen::VectorXd alpha = affine_minimizer(s_points);
            if ((alpha.array() > 0.0).all()) {
                lambda = alpha;
                break;
            }
            double theta = 1.0;
            Eigen::Index hit = -1;
            for (Eigen::Index k = 0; k < alpha.size(); ++k) {
                if (alpha(k) <= 0.0) {
                    const double step = lambda(k) / (lambda(k) - alpha(k));
                    if (step < theta || hit < 0) {
                        theta = step;
                        hit = k;
                    }
                }
            }
            lambda = (1.0 - theta) * lambda + theta * alpha;
            lambda(hit) = 0.0;
            std::vector<Eigen::Index> kept;
            std::vector<double> kept_lambda;
            for (Eigen::Index k = 0; k < lambda.size(); ++k) {
                if (lambda(k) > 0.0) {
                    kept.push_back(active[static_cast<std::size_t>(k)]);
                    kept_lambda.push_back(lambda(k));
                }
            }
            active = std::move(kept);
            lambda = Eigen::Map<Eigen::VectorXd>(kept_lambda.data(), static_cast<Eigen::Index>(kept_lambda.size()));
            lambda /= lambda.sum();
        }
        x = active_points() * lambda;
        out.objective_trace.push_back(x.squaredNorm());
    }
    if (!out.converged) {
        const Eigen::VectorXd grad_dirs = points.transpose() * x;
        gap = 2.0 * (x.squaredNorm() - grad_dirs.minCoeff());
        out.converged = gap < gap_tol;
    }

    out.weights = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < active.size(); ++k)
        out.weights(active[k]) = std::max(lambda(static_cast<Eigen::Index>(k)), 0.0);
    out.weights /= out.weights.sum();
    out.objective = (columns * out.weights - target).squaredNorm();

    // Never worse than the uniform reference point, even when stopped early.
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    const double uniform_objective = (columns * uniform - target).squaredNorm();
    if (uniform_objective < out.objective) {
        out.weights = uniform;
        out.objective = uniform_objective;
    }
    out.duality_gap = gap;
    out.iterations = iter;
    return out;
}

ScWeights sc_weights(const PanelData& panel, const PredictorSpec& spec) {
    if (panel.n_controls() < 2) throw ValidationError("synthetic control needs at least 2 control units");
    const ScPredictors pred = build_predictors(panel, spec);
    return simplex_least_squares(pred.controls, pred.treated);
}

ScEstimate sc_att(const PanelData& panel, const PredictorSpec& spec) {
    ScEstimate est;
    est.weights = sc_weights(panel, spec);
    est.att.resize(panel.t1() + 1);
    const auto controls = panel.control_outcomes();
    for (int t = 0; t <= panel.t1(); ++t) {
        const Eigen::Index c = panel.column(t);
        est.att(t) = panel.outcomes()(0, c) - controls.col(c).dot(est.weights.weights);
    }
    return est;
}

}  // namespace shortpanel
