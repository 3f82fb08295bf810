#include "shortpanel/errors.hpp"
#include "shortpanel/linalg.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace shortpanel;
using Eigen::MatrixXd;

namespace {

double rel_dev(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("svd reconstructs and sorts singular values") {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 50; ++rep) {
        std::uniform_int_distribution<int> dim(1, 8);
        const MatrixXd b = testing::uniform_matrix(rng, dim(rng), dim(rng));
        const auto f = linalg::svd(b);
        MatrixXd sigma = MatrixXd::Zero(b.rows(), b.cols());
        for (Eigen::Index j = 0; j < f.singular_values.size(); ++j) sigma(j, j) = f.singular_values(j);
        CHECK(testing::eig_norm(b - f.u * sigma * f.v.transpose()) <= 1e-10 * std::max(1.0, testing::eig_norm(b)));
        for (Eigen::Index j = 1; j < f.singular_values.size(); ++j)
            CHECK(f.singular_values(j) <= f.singular_values(j - 1));
        CHECK(f.singular_values.minCoeff() >= 0.0);
        CHECK((f.u.transpose() * f.u - MatrixXd::Identity(b.rows(), b.rows())).norm() < 1e-12);
        CHECK((f.v.transpose() * f.v - MatrixXd::Identity(b.cols(), b.cols())).norm() < 1e-12);
    }
}

TEST_CASE("pseudoinverse examples") {
    CHECK(linalg::svd_pinv(MatrixXd::Identity(3, 3)).isApprox(MatrixXd::Identity(3, 3), 1e-15));
    const MatrixXd z = linalg::svd_pinv(MatrixXd::Zero(2, 3));
    CHECK(z.rows() == 3);
    CHECK(z.cols() == 2);
    CHECK(z.norm() == 0.0);

    std::mt19937_64 rng(2);
    const MatrixXd b = testing::uniform_matrix(rng, 4, 3);
    const MatrixXd p = linalg::svd_pinv(b);
    // Normal-equations oracle with an explicit 3x3 inverse.
    const MatrixXd oracle = (b.transpose() * b).inverse() * b.transpose();
    CHECK((p - oracle).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((p * b - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pseudoinverse satisfies the Penrose conditions, including rank-deficient input") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 200; ++rep) {
        std::uniform_int_distribution<int> dim(1, 8);
        const int m = dim(rng), n = dim(rng);
        MatrixXd b = testing::uniform_matrix(rng, m, n);
        if (rep % 3 == 0 && std::min(m, n) > 1) {
            const int k = std::min(m, n) - 1;
            b = testing::uniform_matrix(rng, m, k) * testing::uniform_matrix(rng, k, n);
        }
        const MatrixXd p = linalg::svd_pinv(b);
        const double scale = std::max(1.0, testing::eig_norm(b) * testing::eig_norm(p));
        CHECK((b * p * b - b).cwiseAbs().maxCoeff() <= 1e-10 * scale);
        CHECK((p * b * p - p).cwiseAbs().maxCoeff() <= 1e-10 * scale * std::max(1.0, testing::eig_norm(p)));
        CHECK(((b * p).transpose() - b * p).cwiseAbs().maxCoeff() <= 1e-10 * scale);
        CHECK(((p * b).transpose() - p * b).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    }
}

TEST_CASE("pseudoinverse rank tolerance drops small singular values") {
    MatrixXd b = MatrixXd::Zero(2, 2);
    b(0, 0) = 1.0;
    b(1, 1) = 1e-9;
    CHECK(linalg::svd_pinv(b)(1, 1) == doctest::Approx(1e9));
    CHECK(linalg::svd_pinv(b, 1e-6)(1, 1) == 0.0);
    CHECK(linalg::numerical_rank(linalg::svd(b).singular_values, 1e-6) == 1);
}

TEST_CASE("Tikhonov inverse examples") {
    MatrixXd b(1, 1);
    b(0, 0) = 2.0;
    const MatrixXd t = linalg::tikhonov_inverse(b, 1.0);
    CHECK(t(0, 0) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(testing::eig_norm(linalg::svd_pinv(b) - t) == doctest::Approx(0.1).epsilon(1e-14));

    CHECK(linalg::tikhonov_inverse(MatrixXd::Identity(2, 2), 1.0).isApprox(0.5 * MatrixXd::Identity(2, 2), 1e-15));

    std::mt19937_64 rng(4);
    const MatrixXd r = testing::uniform_matrix(rng, 5, 3);
    const MatrixXd direct = (r.transpose() * r + 0.1 * MatrixXd::Identity(3, 3)).partialPivLu().solve(r.transpose());
    CHECK((linalg::tikhonov_inverse(r, 0.1) - direct).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(linalg::tikhonov_inverse(r, 0.0), ValidationError);
    CHECK_THROWS_AS(linalg::tikhonov_inverse(r, -1.0), ValidationError);
}

TEST_CASE("psd square root") {
    CHECK(linalg::psd_sqrt(MatrixXd::Identity(3, 3)).isApprox(MatrixXd::Identity(3, 3), 1e-15));
    MatrixXd d = MatrixXd::Zero(2, 2);
    d(0, 0) = 4.0;
    d(1, 1) = 9.0;
    const MatrixXd s = linalg::psd_sqrt(d);
    CHECK(s(0, 0) == doctest::Approx(2.0));
    CHECK(s(1, 1) == doctest::Approx(3.0));
    CHECK(std::abs(s(0, 1)) < 1e-15);

    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const MatrixXd m = testing::uniform_matrix(rng, 3, 3);
        const MatrixXd w = m.transpose() * m;
        const MatrixXd root = linalg::psd_sqrt(w);
        CHECK(testing::eig_norm(root * root - w) < 1e-10);
        CHECK((root - root.transpose()).norm() == 0.0);
    }

    MatrixXd asym = MatrixXd::Identity(2, 2);
    asym(0, 1) = 0.5;
    CHECK_THROWS_AS(linalg::psd_sqrt(asym), ValidationError);
    MatrixXd neg = MatrixXd::Identity(2, 2);
    neg(1, 1) = -1e-3;
    CHECK_THROWS_AS(linalg::psd_sqrt(neg), ValidationError);
    MatrixXd tiny = MatrixXd::Identity(2, 2);
    tiny(1, 1) = -1e-13;
    const MatrixXd clamped = linalg::psd_sqrt(tiny);
    CHECK(clamped(1, 1) == 0.0);
}

TEST_CASE("spectral norm") {
    MatrixXd d = MatrixXd::Zero(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = 1.0;
    CHECK(linalg::spectral_norm(d) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(linalg::spectral_norm(MatrixXd::Zero(3, 2)) == 0.0);
    std::mt19937_64 rng(6);
    const MatrixXd b = testing::uniform_matrix(rng, 6, 4);
    CHECK(std::abs(linalg::spectral_norm(b) - testing::power_norm(b)) < 1e-8);
}

TEST_CASE("Tikhonov identities hold for random matrices of every shape") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> dim(1, 8);
    double worst = 0.0;
    for (int rep = 0; rep < 250; ++rep) {
        const MatrixXd b = testing::uniform_matrix(rng, dim(rng), dim(rng));
        const Eigen::Index n = b.cols();
        const auto f = linalg::svd(b);
        const Eigen::VectorXd& s = f.singular_values;
        const Eigen::Index q = linalg::numerical_rank(s, linalg::default_rank_tol(b.rows(), b.cols()));
        REQUIRE(q >= 1);
        const double sq = s(q - 1);
        for (double delta : {1e-4, 1e-2, 1.0, 10.0}) {
            const MatrixXd a = b.transpose() * b + delta * MatrixXd::Identity(n, n);
            const MatrixXd a_inv = a.partialPivLu().inverse();
            const MatrixXd t = a.partialPivLu().solve(b.transpose());

            CHECK(testing::eig_norm(a_inv) <= 1.0 / delta * (1.0 + 1e-8));

            double peak = 0.0;
            for (Eigen::Index j = 0; j < s.size(); ++j) peak = std::max(peak, s(j) / (s(j) * s(j) + delta));
            const double nb = testing::eig_norm(t);
            worst = std::max(worst, rel_dev(nb, peak));
            CHECK(nb <= 1.0 / (2.0 * std::sqrt(delta)) * (1.0 + 1e-8));
            if (std::sqrt(delta) < sq) worst = std::max(worst, rel_dev(nb, sq / (sq * sq + delta)));

            worst = std::max(worst, rel_dev(testing::eig_norm(b * t), s(0) * s(0) / (s(0) * s(0) + delta)));
            worst = std::max(worst, rel_dev(testing::eig_norm(linalg::svd_pinv(b) - t), delta / (sq * (sq * sq + delta))));
        }
    }
    CHECK(worst <= 1e-8);
}
