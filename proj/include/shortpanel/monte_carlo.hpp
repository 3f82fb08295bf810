#pragma once

#include "shortpanel/panel.hpp"
#include "shortpanel/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace shortpanel {

/// Noise scales of the simulation design (standard deviations).
struct NoiseScales {
    double eps_sd = 1.0;          // epsilon_it for controls
    double treated_eps_sd = 1.0;  // epsilon_0t
    double u_sd = 0.2;            // u_1i, u_2i (variance 0.04)
};

struct McConfig {
    int t0 = 5;
    int n = 100;  // total units, treated unit included
    int reps = 500;
    std::uint64_t base_seed = 1;
    std::vector<std::string> methods;  // built-in labels; empty = all
    NoiseScales noise;
    int jobs = 0;  // worker threads; 0 = hardware concurrency
    /// Redraws allowed per replication before it is given up.
    int max_attempts = 20;
};

/// Throws ValidationError (reps >= 1, t0 >= 1, n >= max(t0, 3) + 2, scales >= 0).
void validate_mc_config(const McConfig& config);

/// Built-in method labels in table order.
const std::vector<std::string>& builtin_method_labels();

/// E[exp(-0.2 Z)] and E[log(1 + Z^4)] for Z ~ N(0, 1).
double centering_exp();
double centering_log();

/// Factor values F_1t, F_2t (2 x (T0 + 1), calendar order), fixed per study
/// and derived from the base seed alone.
struct StudyFactors {
    Eigen::MatrixXd f;
    Eigen::VectorXd singular_values;
};
StudyFactors draw_study_factors(std::uint64_t base_seed, int t0);

/// Latent pieces of one simulated panel.
struct DgpTruth {
    Eigen::VectorXd z;        // N
    Eigen::VectorXd lambda1;  // N
    Eigen::VectorXd lambda2;  // N
    Eigen::MatrixXd factors;  // 2 x (T0 + 1)
    Eigen::MatrixXd b;        // 2 x (T0 + 1): b_1t, b_2t
    Eigen::MatrixXd eps;      // N x (T0 + 1)
    double y00_untreated = 0.0;
    double effect = 1.0;
};

/// Substream generator for (base_seed, stream, attempt).
std::mt19937_64 substream(std::uint64_t base_seed, std::uint64_t stream, std::uint64_t attempt);

/// One panel of the design: covariates (1, Z), treated unit first, T1 = 0,
/// Y_00 = 1 + Y_00(0).
std::pair<PanelData, DgpTruth> gen_dgp_panel(const McConfig& config, const StudyFactors& factors, int rep,
                                             int attempt = 0);

struct MethodOutcome {
    double estimate = 0.0;  // ATT_0
    bool failed = false;
    std::string reason;
};

struct StudyMethod {
    std::string label;
    std::function<MethodOutcome(const PanelData&, const DgpTruth&, int rep)> run;
};

/// Factor-model estimator; exceptions become failed outcomes.
StudyMethod factor_method(std::string label, EstimatorConfig config);
StudyMethod did_method();
/// SC; non-convergence counts as failure.
StudyMethod sc_method(std::string label, bool predictors_ii);
/// Throws ValidationError on an unknown label.
StudyMethod builtin_method(const std::string& label);

struct Summary {
    double bias = 0.0;
    double sd = 0.0;  // sample sd (n - 1); 0 for a single estimate
    double rmse = 0.0;
};

/// bias = mean - truth, sd = sample sd, rmse = sqrt(mean((est - truth)^2)).
Summary summarize(const std::vector<double>& estimates, double truth);

struct MethodResult {
    std::string label;
    Summary summary;
    std::vector<double> estimates;  // per kept replication, by replication index
};

struct McResult {
    McConfig config;
    std::vector<MethodResult> methods;
    int dropped = 0;  // failed attempts that were redrawn
    int lost = 0;     // replications abandoned after max_attempts
    bool unreliable = false;
    StudyFactors factors;
    double centering_exp = 0.0;
    double centering_log = 0.0;
    std::vector<std::string> warnings;
};

inline constexpr double kMaxDropShare = 0.10;

/// Runs every method on each replication; a failure in any method drops the
/// draw for all methods and redraws it. Output does not depend on `jobs`.
McResult run_study(const McConfig& config);
McResult run_study(const McConfig& config, const std::vector<StudyMethod>& methods);

}  // namespace shortpanel
