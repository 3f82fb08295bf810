#pragma once

#include "shortpanel/monte_carlo.hpp"
#include "shortpanel/panel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace testing {

inline Eigen::MatrixXd uniform_matrix(std::mt19937_64& rng, Eigen::Index m, Eigen::Index n, double lo = -1.0,
                                      double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::MatrixXd b(m, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < m; ++i) b(i, j) = u(rng);
    return b;
}

inline Eigen::MatrixXd normal_matrix(std::mt19937_64& rng, Eigen::Index m, Eigen::Index n) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd b(m, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < m; ++i) b(i, j) = g(rng);
    return b;
}

// Spectral norm through the eigenvalues of M'M, independent of the SVD code.
inline double eig_norm(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    const Eigen::MatrixXd g = m.rows() >= m.cols() ? Eigen::MatrixXd(m.transpose() * m)
                                                    : Eigen::MatrixXd(m * m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

inline double power_norm(const Eigen::MatrixXd& m, int iters = 5000) {
    Eigen::VectorXd x = Eigen::VectorXd::Ones(m.cols());
    double s = 0.0;
    for (int k = 0; k < iters; ++k) {
        Eigen::VectorXd y = m.transpose() * (m * x);
        const double n = y.norm();
        if (n == 0.0) return 0.0;
        x = y / n;
        s = std::sqrt(n);
    }
    return s;
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::filesystem::path temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "shortpanel_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

inline std::string write_text(const std::string& name, const std::string& text) {
    const auto p = temp_path(name);
    std::ofstream(p, std::ios::binary) << text;
    return p.string();
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Simulation design with every noise scale switched off.
inline shortpanel::McConfig noiseless_config(int t0, int n, std::uint64_t seed = 1) {
    shortpanel::McConfig c;
    c.t0 = t0;
    c.n = n;
    c.base_seed = seed;
    c.noise.eps_sd = 0.0;
    c.noise.treated_eps_sd = 0.0;
    c.noise.u_sd = 0.0;
    return c;
}

// Control units i = 1..n0 with Z ~ N(0,1), covariates (1, Z), and outcomes
// Y_it = a_t + c_t Z_i + sum_k F_kt g_k(Z_i) (no noise); unit 0 is treated
// with covariate z0 and no effect added.
struct FactorPanel {
    shortpanel::PanelData panel;
    Eigen::VectorXd y0_untreated;  // treated unit, all periods
};

inline FactorPanel factor_panel(std::mt19937_64& rng, int n0, int t0, int t1, const Eigen::MatrixXd& f,
                                double z0 = 1.0, bool include_intercept = true) {
    const int periods = t0 + t1 + 1;
    std::normal_distribution<double> g;
    Eigen::VectorXd z(n0 + 1);
    z(0) = z0;
    for (int i = 1; i <= n0; ++i) z(i) = g(rng);
    auto load = [](int k, double x) {
        switch (k) {
            case 0: return std::log1p(x * x * x * x);
            case 1: return x * x * x - 0.5 * x * x;
            default: return std::cos(x);
        }
    };
    Eigen::MatrixXd y(n0 + 1, periods);
    for (int i = 0; i <= n0; ++i)
        for (int c = 0; c < periods; ++c) {
            double v = 0.5 + 0.1 * c + (1.0 + 0.05 * c) * z(i);
            for (Eigen::Index k = 0; k < f.rows(); ++k) v += f(k, c) * load(static_cast<int>(k), z(i));
            y(i, c) = v;
        }
    Eigen::MatrixXd cov(n0 + 1, include_intercept ? 2 : 1);
    if (include_intercept) {
        cov.col(0).setOnes();
        cov.col(1) = z;
    } else {
        cov.col(0) = z;
    }
    std::vector<bool> treated(static_cast<std::size_t>(n0 + 1), false);
    treated[0] = true;
    Eigen::VectorXd y0 = y.row(0).transpose();
    return {shortpanel::PanelData(y, treated, cov, t0), y0};
}

}  // namespace testing
