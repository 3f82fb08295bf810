#include "shortpanel/quadrature.hpp"

#include "shortpanel/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace shortpanel::quadrature {

Rule gauss_legendre(int n) {
    if (n < 1) throw ValidationError("quadrature order must be positive");
    Rule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (x * p0 - p1) / (x * x - 1.0);
            const double step = p0 / dp;
            x -= step;
            if (std::abs(step) < 1e-16) break;
        }
        // Recompute the derivative at the converged node.
        double p0 = 1.0, p1 = 0.0;
        for (int k = 1; k <= n; ++k) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
        }
        dp = n * (x * p0 - p1) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[static_cast<std::size_t>(i)] = -x;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    return rule;
}

Rule gauss_hermite(int n) {
    if (n < 1) throw ValidationError("quadrature order must be positive");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd off(n > 1 ? n - 1 : 0);
    for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(k / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
    Rule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    const double mu0 = std::sqrt(std::numbers::pi);
    for (int k = 0; k < n; ++k) {
        const double v0 = eig.eigenvectors()(0, k);
        rule.nodes[static_cast<std::size_t>(k)] = eig.eigenvalues()(k);
        rule.weights[static_cast<std::size_t>(k)] = mu0 * v0 * v0;
    }
    return rule;
}

double normal_expectation_hermite(const std::function<double(double)>& f, int n) {
    const Rule rule = gauss_hermite(n);
    double sum = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k)
        sum += rule.weights[k] * f(std::numbers::sqrt2 * rule.nodes[k]);
    return sum / std::sqrt(std::numbers::pi);
}

double normal_expectation(const std::function<double(double)>& f, int panels) {
    if (panels < 1) throw ValidationError("panel count must be positive");
    constexpr double half_width = 12.0;
    static const Rule rule = gauss_legendre(20);
    const double h = 2.0 * half_width / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = -half_width + (p + 0.5) * h;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
            const double z = mid + 0.5 * h * rule.nodes[k];
            sum += 0.5 * h * rule.weights[k] * f(z) * std::exp(-0.5 * z * z);
        }
    }
    return sum / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace shortpanel::quadrature
