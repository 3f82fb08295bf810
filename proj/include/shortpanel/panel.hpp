#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace shortpanel {

// Control-covariate Gram matrices with a larger condition number are treated
// as singular by the estimators (and flagged by validate()).
inline constexpr double kCollinearityThreshold = 1e12;

/// Balanced panel of N units observed over periods t = -T0, ..., T1.
///
/// Treatment happens at t = 0. Treated units are moved to the front on
/// construction, so with a single treated unit it is always unit 0 and the
/// controls are units 1..N-1. Outcome columns run in calendar order
/// (column 0 is t = -T0). Immutable after construction.
class PanelData {
public:
    /// `outcomes` is N x (T0 + T1 + 1); `covariates` is N x d with d >= 1.
    /// Throws ValidationError on inconsistent shapes, non-finite values,
    /// or no untreated unit.
    PanelData(Eigen::MatrixXd outcomes, std::vector<bool> treated,
              Eigen::MatrixXd covariates, int t0,
              std::vector<std::string> unit_labels = {});

    Eigen::Index n_units() const { return outcomes_.rows(); }
    Eigen::Index n_covariates() const { return covariates_.cols(); }
    Eigen::Index n_periods() const { return outcomes_.cols(); }
    int t0() const { return t0_; }
    int t1() const { return static_cast<int>(outcomes_.cols()) - t0_ - 1; }

    Eigen::Index n_treated() const { return n_treated_; }
    Eigen::Index n_controls() const { return n_units() - n_treated_; }
    /// Index of the first control unit (== n_treated()).
    Eigen::Index first_control() const { return n_treated_; }

    const Eigen::MatrixXd& outcomes() const { return outcomes_; }
    const Eigen::MatrixXd& covariates() const { return covariates_; }
    const std::vector<bool>& treated() const { return treated_; }
    const std::vector<std::string>& unit_labels() const { return labels_; }

    /// Column of period t in outcomes(); throws ValidationError when out of range.
    Eigen::Index column(int period) const;
    double outcome(Eigen::Index unit, int period) const { return outcomes_(unit, column(period)); }

    /// (Y_{i,-1}, ..., Y_{i,-T0}): most recent pre-period first.
    Eigen::VectorXd pre_outcomes(Eigen::Index unit) const;

    auto control_outcomes() const { return outcomes_.bottomRows(n_controls()); }
    auto control_covariates() const { return covariates_.bottomRows(n_controls()); }

private:
    Eigen::MatrixXd outcomes_;
    std::vector<bool> treated_;
    Eigen::MatrixXd covariates_;
    std::vector<std::string> labels_;
    int t0_ = 0;
    Eigen::Index n_treated_ = 0;
};

struct PanelDiagnostics {
    Eigen::Index n_units = 0;
    Eigen::Index n_controls = 0;
    Eigen::Index n_treated = 0;
    double gram_condition = 0.0;  // of (1/N0) sum Z_i Z_i' over controls
    bool collinear = false;       // gram_condition > kCollinearityThreshold
    Eigen::VectorXd control_means;  // per period, calendar order
    std::vector<std::string> warnings;
};

/// Condition number of (1/n) Z'Z; +inf when it is singular or Z is empty.
double gram_condition_number(const Eigen::Ref<const Eigen::MatrixXd>& z);

/// Reports, never throws.
PanelDiagnostics validate(const PanelData& panel);

/// Long-format CSV with header `unit,time,treated,y,z1,...,zd`.
/// Periods must form a contiguous integer range with min < 0 <= max.
PanelData load_panel_csv(std::istream& in);
PanelData load_panel_csv(const std::filesystem::path& path);

/// Writes the long format read by load_panel_csv, sorted by unit then time.
void write_panel_csv(std::ostream& out, const PanelData& panel);

}  // namespace shortpanel
