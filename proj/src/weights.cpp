#include "shortpanel/weights.hpp"

#include "shortpanel/errors.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace shortpanel {

double hermite(int degree, double x) {
    if (degree < 0) throw ValidationError("Hermite degree must be nonnegative");
    double prev = 1.0;
    if (degree == 0) return prev;
    double cur = 2.0 * x;
    for (int k = 1; k < degree; ++k) {
        const double next = 2.0 * x * cur - 2.0 * k * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

WeightFunctionSet::WeightFunctionSet(Eigen::Index count, RawFunction raw, std::string description)
    : count_(count), raw_(std::move(raw)), description_(std::move(description)) {
    if (count_ < 1) throw ValidationError("need at least one weight function");
    if (!raw_) throw ValidationError("weight function set has no evaluator");
}

Eigen::VectorXd WeightFunctionSet::raw(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    Eigen::VectorXd w = raw_(z);
    if (w.size() != count_) throw ValidationError("weight evaluator returned wrong length");
    return w;
}

Eigen::MatrixXd WeightFunctionSet::raw_matrix(const Eigen::Ref<const Eigen::MatrixXd>& z) const {
    Eigen::MatrixXd out(z.rows(), count_);
    for (Eigen::Index i = 0; i < z.rows(); ++i) out.row(i) = raw(z.row(i).transpose()).transpose();
    return out;
}

WeightFunctionSet WeightFunctionSet::normalized_over(const Eigen::Ref<const Eigen::MatrixXd>& z) const {
    if (z.rows() < 2) throw NumericalError("need at least two units to standardize weight functions");
    const Eigen::MatrixXd w = raw_matrix(z);
    WeightFunctionSet out = *this;
    out.normalized_ = true;
    out.mean_ = w.colwise().mean().transpose();
    out.sd_.resize(count_);
    for (Eigen::Index j = 0; j < count_; ++j) {
        const double ss = (w.col(j).array() - out.mean_(j)).square().sum();
        const double sd = std::sqrt(ss / static_cast<double>(z.rows() - 1));
        if (!(sd > 1e-12 * std::max(1.0, std::abs(out.mean_(j)))))
            throw NumericalError("weight function " + std::to_string(j + 1) +
                                 " is constant over the control units");
        out.sd_(j) = sd;
    }
    return out;
}

Eigen::MatrixXd WeightFunctionSet::evaluate_matrix(const Eigen::Ref<const Eigen::MatrixXd>& z) const {
    Eigen::MatrixXd w = raw_matrix(z);
    if (!normalized_) return w;
    for (Eigen::Index j = 0; j < count_; ++j) w.col(j) = (w.col(j).array() - mean_(j)) / sd_(j);
    return w;
}

Eigen::Index first_varying_covariate(const Eigen::Ref<const Eigen::MatrixXd>& z) {
    for (Eigen::Index k = 0; k < z.cols(); ++k) {
        if (z.rows() > 0 && (z.col(k).array() != z(0, k)).any()) return k;
    }
    throw ValidationError("no covariate varies across control units; nonlinear weights need a non-constant covariate");
}

WeightFunctionSet hermite_weight_functions(Eigen::Index r_weights, Eigen::Index column,
                                           std::vector<Eigen::Index> varying) {
    if (r_weights < 1) throw ValidationError("R must be at least 1");
    const Eigen::Index from_table = std::min<Eigen::Index>(r_weights, kMaxHermiteDegree - 1);
    std::vector<std::pair<Eigen::Index, Eigen::Index>> products;
    for (std::size_t a = 0; a < varying.size(); ++a)
        for (std::size_t b = a + 1; b < varying.size(); ++b) products.emplace_back(varying[a], varying[b]);
    const Eigen::Index extra = r_weights - from_table;
    if (extra > static_cast<Eigen::Index>(products.size()))
        throw ValidationError("R + 1 exceeds supported Hermite degree table (max degree " +
                              std::to_string(kMaxHermiteDegree) + ")");
    products.resize(static_cast<std::size_t>(extra));

    std::string desc = "Hermite H_2..H_" + std::to_string(from_table + 1) + " of z" + std::to_string(column + 1);
    if (extra > 0) desc += " plus " + std::to_string(extra) + " pairwise products";

    auto fn = [r_weights, from_table, column, products](const Eigen::Ref<const Eigen::VectorXd>& z) {
        Eigen::VectorXd w(r_weights);
        const double x = z(column);
        for (Eigen::Index j = 0; j < from_table; ++j) w(j) = hermite(static_cast<int>(j) + 2, x);
        for (std::size_t p = 0; p < products.size(); ++p)
            w(from_table + static_cast<Eigen::Index>(p)) = z(products[p].first) * z(products[p].second);
        return w;
    };
    return WeightFunctionSet(r_weights, std::move(fn), std::move(desc));
}

WeightFunctionSet default_weight_functions(Eigen::Index r_weights,
                                           const Eigen::Ref<const Eigen::MatrixXd>& control_z) {
    const Eigen::Index column = first_varying_covariate(control_z);
    std::vector<Eigen::Index> varying;
    for (Eigen::Index k = 0; k < control_z.cols(); ++k)
        if ((control_z.col(k).array() != control_z(0, k)).any()) varying.push_back(k);
    return hermite_weight_functions(r_weights, column, std::move(varying));
}

WeightFunctionSet hermite_weights(Eigen::Index r_weights, const PanelData& panel) {
    const auto zc = panel.control_covariates();
    return default_weight_functions(r_weights, zc).normalized_over(zc);
}

}  // namespace shortpanel
