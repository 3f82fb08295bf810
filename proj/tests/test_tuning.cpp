#include "shortpanel/errors.hpp"
#include "shortpanel/factor_att.hpp"
#include "shortpanel/monte_carlo.hpp"
#include "shortpanel/tuning.hpp"
#include "checks.hpp"
#include "support.hpp"

#include <doctest.h>

#include <numeric>

using namespace shortpanel;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MomentSet moments_of(const MatrixXd& pre, const MatrixXd& post) {
    MomentSet m;
    m.omega_pre = pre;
    m.omega_post = post;
    m.singular_values = linalg::svd(pre).singular_values;
    return m;
}

PanelData treated_first(const MatrixXd& y, const MatrixXd& z, int t0) {
    std::vector<bool> treated(static_cast<std::size_t>(y.rows()), false);
    treated[0] = true;
    return PanelData(y, treated, z, t0);
}

}  // namespace

TEST_CASE("delta grid") {
    const DeltaGrid g = delta_grid_from_anchor(1.0);
    REQUIRE(g.values.size() == 30);
    CHECK(g.values.front() == 1e2);
    CHECK(g.values.back() == 1e-6);
    const double ratio = std::pow(10.0, -8.0 / 29.0);
    for (std::size_t k = 1; k < g.values.size(); ++k)
        CHECK(g.values[k] / g.values[k - 1] == doctest::Approx(ratio).epsilon(1e-12));
    CHECK_THROWS_AS(delta_grid_from_anchor(0.0), NumericalError);

    std::mt19937_64 rng(30);
    const MatrixXd pre = testing::normal_matrix(rng, 3, 4);
    const MatrixXd post = testing::normal_matrix(rng, 3, 1);
    const MatrixXd a = testing::normal_matrix(rng, 3, 3);
    const MatrixXd w = a.transpose() * a;
    const DeltaGrid dg = delta_grid(moments_of(pre, post), w);
    const double anchor = (pre.transpose() * w * pre).trace() / 4.0;
    CHECK(dg.scale_anchor == doctest::Approx(anchor).epsilon(1e-12));
    CHECK(dg.values.front() == doctest::Approx(1e2 * anchor).epsilon(1e-12));
    CHECK(dg.values.back() == doctest::Approx(1e-6 * anchor).epsilon(1e-12));

    const DeltaGrid scaled = delta_grid(moments_of(10.0 * pre, post), w);
    for (std::size_t k = 0; k < dg.values.size(); ++k)
        CHECK(scaled.values[k] == doctest::Approx(100.0 * dg.values[k]).epsilon(1e-12));

    CHECK_THROWS_AS(delta_grid(moments_of(MatrixXd::Zero(3, 4), post), w), NumericalError);
}

TEST_CASE("CV scores match a scalar delete-one computation") {
    const double z[3] = {1.0, -0.5, 2.0};
    const double y[3][2] = {{1.0, 2.0}, {0.5, -1.0}, {-0.7, 3.0}};
    const PanelData p = checks::hand_cv_panel(z, y);
    EstimatorConfig c;
    c.variant = Variant::ridge;
    c.r_weights = 1;
    c.delta_rule = CrossValidation{};
    const DeltaGrid grid = delta_grid_from_anchor(0.37);
    const DeltaSelection sel = select_delta_cv(p, c, 0, grid);
    REQUIRE(sel.scores.size() == grid.values.size());
    for (std::size_t k = 0; k < grid.values.size(); ++k) {
        const double hand = checks::hand_cv_score(z, y, grid.values[k]);
        CHECK(std::abs(sel.scores[k] - hand) <= 1e-12 * std::max(1.0, hand));
    }
    const auto best = std::min_element(sel.scores.begin(), sel.scores.end());
    CHECK(sel.chosen == grid.values[static_cast<std::size_t>(best - sel.scores.begin())]);
    CHECK(sel.skipped_units == 0);
}

TEST_CASE("CV picks the smallest delta on exact-fit data") {
    std::mt19937_64 rng(31);
    MatrixXd z(12, 2);
    z.col(0).setOnes();
    z.col(1) = testing::normal_matrix(rng, 12, 1);
    MatrixXd y(12, 4);
    for (int c = 0; c < 4; ++c) y.col(c) = (0.5 + c) * z.col(0) + (2.0 - c) * z.col(1);
    const PanelData p = treated_first(y, z, 3);
    EstimatorConfig c;
    c.variant = Variant::ridge;
    c.delta_rule = CrossValidation{};
    const DeltaSelection sel = select_delta_cv(p, c, 0);
    CHECK(sel.chosen == sel.grid.back());
}

TEST_CASE("CV is deterministic and needs three controls") {
    McConfig mc;
    mc.t0 = 3;
    mc.n = 40;
    const StudyFactors f = draw_study_factors(4, mc.t0);
    const auto [panel, truth] = gen_dgp_panel(mc, f, 2);
    EstimatorConfig c;
    c.variant = Variant::ridge;
    c.delta_rule = CrossValidation{};
    const DeltaSelection a = select_delta_cv(panel, c, 0);
    const DeltaSelection b = select_delta_cv(panel, c, 0);
    CHECK(a.scores == b.scores);
    CHECK(a.chosen == b.chosen);
    CHECK_THROWS_AS(select_delta_cv(panel, c, 1), ValidationError);

    MatrixXd y(3, 2), z(3, 1);
    y << 1, 2, 3, 4, 5, 7;
    z << 1, 2, 3;
    CHECK_THROWS_AS(select_delta_cv(treated_first(y, z, 1), c, 0, delta_grid_from_anchor(1.0)), ValidationError);
}

TEST_CASE("GCV scores match the scalar formula for R = 2, T0 = 1") {
    MatrixXd pre(2, 1), post(2, 1);
    pre << 0.8, -0.3;
    post << 0.5, 0.4;
    const MomentSet m = moments_of(pre, post);
    const MatrixXd w = MatrixXd::Identity(2, 2);
    const DeltaGrid grid = delta_grid(m, w);
    const DeltaSelection sel = select_delta_gcv(m, w, 0, 50, grid);
    const double aa = 0.64 + 0.09;
    for (std::size_t k = 0; k < grid.values.size(); ++k) {
        const double hand = checks::hand_gcv_score(0.8, -0.3, 0.5, 0.4, grid.values[k]);
        CHECK(std::abs(sel.scores[k] - hand) <= 1e-12 * std::max(1.0, hand));
    }
    CHECK(grid.scale_anchor == doctest::Approx(aa).epsilon(1e-14));
}

TEST_CASE("GCV pointwise formula with a general weighting matrix") {
    std::mt19937_64 rng(32);
    const MatrixXd pre = testing::normal_matrix(rng, 3, 2);
    const MatrixXd post = testing::normal_matrix(rng, 3, 1);
    const MatrixXd a = testing::normal_matrix(rng, 3, 3);
    const MatrixXd w = a.transpose() * a + 0.3 * MatrixXd::Identity(3, 3);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(w);
    const MatrixXd root = es.operatorSqrt();
    const MatrixXd aw = root * pre;
    const VectorXd bw = root * post.col(0);
    const WeightedMoments wm(moments_of(pre, post), w);
    for (double d : {1e-4, 0.03, 1.0, 40.0}) {
        const MatrixXd h = aw * (aw.transpose() * aw + d * MatrixXd::Identity(2, 2)).inverse() * aw.transpose();
        const VectorXd resid = bw - h * bw;
        const double den = 1.0 - h.trace() / 3.0;
        const double hand = resid.squaredNorm() / (den * den);
        CHECK(gcv_score(wm, 0, d) == doctest::Approx(hand).epsilon(1e-10));
    }
    // Large-delta limit: the fit vanishes and the score is |W^{1/2} Omega_t|^2.
    CHECK(gcv_score(wm, 0, 1e30) == doctest::Approx(bw.squaredNorm()).epsilon(1e-10));
}

TEST_CASE("GCV prefers the smallest delta when Omega_t lies in the span") {
    std::mt19937_64 rng(33);
    const MatrixXd pre = testing::normal_matrix(rng, 3, 2);
    VectorXd coef(2);
    coef << 0.7, -1.1;
    const MatrixXd post = pre * coef;
    const MomentSet m = moments_of(pre, post);
    const DeltaSelection sel = select_delta_gcv(m, MatrixXd::Identity(3, 3), 0, 100);
    CHECK(sel.chosen == sel.grid.back());
    CHECK_THROWS_AS(select_delta_gcv(moments_of(pre.topRows(1), post.topRows(1)), MatrixXd::Identity(1, 1), 0, 100),
                    ValidationError);
}

TEST_CASE("GCV selection is invariant to the order of control units") {
    McConfig mc;
    mc.t0 = 5;
    mc.n = 60;
    const StudyFactors f = draw_study_factors(5, mc.t0);
    const auto [panel, truth] = gen_dgp_panel(mc, f, 0);
    const MatrixXd& y = panel.outcomes();
    const MatrixXd& z = panel.covariates();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(y.rows() - 1));
    std::iota(order.begin(), order.end(), 1);
    std::mt19937_64 rng(34);
    std::shuffle(order.begin(), order.end(), rng);
    MatrixXd yp = y, zp = z;
    for (std::size_t k = 0; k < order.size(); ++k) {
        yp.row(static_cast<Eigen::Index>(k) + 1) = y.row(order[k]);
        zp.row(static_cast<Eigen::Index>(k) + 1) = z.row(order[k]);
    }
    const PanelData shuffled = treated_first(yp, zp, mc.t0);
    for (int r : {2, 3}) {
        EstimatorConfig c;
        c.variant = Variant::ridge;
        c.r_weights = r;
        c.delta_rule = GeneralizedCrossValidation{};
        const EstimateResult a = estimate_att(panel, c);
        const EstimateResult b = estimate_att(shuffled, c);
        const auto& sa = a.delta_selections.at(0);
        const auto& sb = b.delta_selections.at(0);
        for (std::size_t k = 0; k < sa.scores.size(); ++k)
            CHECK(sb.scores[k] == doctest::Approx(sa.scores[k]).epsilon(1e-9));
        CHECK(sa.chosen == doctest::Approx(sb.chosen).epsilon(1e-12));
        CHECK(a.att(0) == doctest::Approx(b.att(0)).epsilon(1e-9));
    }
}

TEST_CASE("estimate_att records the tuning outcome per period") {
    std::mt19937_64 rng(35);
    auto fp = testing::factor_panel(rng, 80, 3, 1, testing::normal_matrix(rng, 2, 5));
    MatrixXd y = fp.panel.outcomes();
    y.bottomRows(80) += 0.05 * testing::normal_matrix(rng, 80, 5);
    const PanelData p = treated_first(y, fp.panel.covariates(), 3);
    EstimatorConfig c;
    c.variant = Variant::ridge;
    c.delta_rule = CrossValidation{};
    const EstimateResult r = estimate_att(p, c);
    REQUIRE(r.delta_selections.size() == 2);
    REQUIRE(r.delta_used.size() == 2);
    for (int t = 0; t < 2; ++t) {
        const DeltaSelection direct = select_delta_cv(p, c, t);
        CHECK(r.delta_used[static_cast<std::size_t>(t)] == direct.chosen);
        CHECK(r.delta_selections[static_cast<std::size_t>(t)].scores == direct.scores);
    }
}
