#pragma once

#include <functional>
#include <vector>

namespace shortpanel::quadrature {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
Rule gauss_legendre(int n);

/// n-point Gauss-Hermite rule for the weight exp(-x^2) (Golub-Welsch).
Rule gauss_hermite(int n);

/// E[f(Z)], Z ~ N(0,1), by an n-node Gauss-Hermite rule. Converges slowly for
/// integrands with complex singularities near the real axis.
double normal_expectation_hermite(const std::function<double(double)>& f, int n);

/// E[f(Z)], Z ~ N(0,1), by composite 20-point Gauss-Legendre over
/// [-12, 12] split into `panels` equal pieces (density mass outside ~1e-32).
double normal_expectation(const std::function<double(double)>& f, int panels = 200);

}  // namespace shortpanel::quadrature
