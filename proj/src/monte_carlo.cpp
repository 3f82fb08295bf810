#include "shortpanel/monte_carlo.hpp"

#include "shortpanel/baselines.hpp"
#include "shortpanel/errors.hpp"
#include "shortpanel/factor_att.hpp"
#include "shortpanel/linalg.hpp"
#include "shortpanel/quadrature.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <thread>

namespace shortpanel {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream 0 holds the study factors; replication k uses stream k + 1.
constexpr std::uint64_t kFactorStream = 0;

}  // namespace

std::mt19937_64 substream(std::uint64_t base_seed, std::uint64_t stream, std::uint64_t attempt) {
    const std::uint64_t s = splitmix64(splitmix64(splitmix64(base_seed) ^ stream) ^ (attempt * 0xd1b54a32d192ed03ULL));
    return std::mt19937_64(s);
}

void validate_mc_config(const McConfig& c) {
    if (c.reps < 1) throw ValidationError("reps must be at least 1");
    if (c.t0 < 1) throw ValidationError("t0 must be at least 1");
    if (c.n < std::max(c.t0, 3) + 2)
        throw ValidationError("n must be at least max(t0, 3) + 2 (got n=" + std::to_string(c.n) + ")");
    if (c.jobs < 0) throw ValidationError("jobs must be nonnegative");
    if (c.max_attempts < 1) throw ValidationError("max_attempts must be at least 1");
    const NoiseScales& s = c.noise;
    for (double v : {s.eps_sd, s.treated_eps_sd, s.u_sd})
        if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("noise scales must be finite and nonnegative");
}

const std::vector<std::string>& builtin_method_labels() {
    static const std::vector<std::string> labels = {"R=2 (no tuning)", "R=2 (CV)", "R=2 (GCV)", "R=3 (CV)",
                                                    "R=3 (GCV)",       "DID",      "SCM-I",     "SCM-II"};
    return labels;
}

double centering_exp() { return std::exp(0.02); }

double centering_log() {
    static const double value = quadrature::normal_expectation([](double z) { return std::log1p(z * z * z * z); });
    return value;
}

StudyFactors draw_study_factors(std::uint64_t base_seed, int t0) {
    if (t0 < 1) throw ValidationError("t0 must be at least 1");
    auto rng = substream(base_seed, kFactorStream, 0);
    std::normal_distribution<double> normal;
    StudyFactors out;
    out.f.resize(2, t0 + 1);
    for (int j = 0; j < 2; ++j)
        for (int c = 0; c <= t0; ++c) out.f(j, c) = normal(rng);
    out.singular_values = linalg::svd(out.f).singular_values;
    return out;
}

std::pair<PanelData, DgpTruth> gen_dgp_panel(const McConfig& config, const StudyFactors& factors, int rep,
                                             int attempt) {
    const int n = config.n;
    const int t0 = config.t0;
    const int periods = t0 + 1;
    if (factors.f.rows() != 2 || factors.f.cols() != periods)
        throw ValidationError("study factors do not match t0");

    auto rng = substream(config.base_seed, static_cast<std::uint64_t>(rep) + 1, static_cast<std::uint64_t>(attempt));
    std::normal_distribution<double> normal;
    const NoiseScales& s = config.noise;

    DgpTruth truth;
    truth.factors = factors.f;
    truth.z.resize(n);
    truth.lambda1.resize(n);
    truth.lambda2.resize(n);
    truth.eps.resize(n, periods);
    truth.b.resize(2, periods);
    for (int c = 0; c < periods; ++c) {
        const double t = c - t0;
        const double ramp = (t - 1.0) / t0;
        truth.b(0, c) = ramp + 1.0;
        truth.b(1, c) = ramp * ramp + 1.0;
    }

    const double e_log = centering_log();
    const double e_exp = centering_exp();
    // Standard normals are always drawn and then scaled, so zero scales keep
    // the remaining draws aligned.
    for (int i = 0; i < n; ++i) {
        const double zi = normal(rng) + (i == 0 ? 1.0 : 0.0);
        const double u1 = s.u_sd * normal(rng);
        const double u2 = s.u_sd * normal(rng);
        truth.z(i) = zi;
        truth.lambda1(i) = std::log1p(zi * zi * zi * zi) - e_log + u1;
        truth.lambda2(i) = 0.5 * (std::exp(-0.2 * zi) - e_exp) + u2;
    }
    for (int i = 0; i < n; ++i) {
        const double sd = i == 0 ? s.treated_eps_sd : s.eps_sd;
        for (int c = 0; c < periods; ++c) truth.eps(i, c) = sd * normal(rng);
    }

    Eigen::MatrixXd y(n, periods);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < periods; ++c)
            y(i, c) = truth.b(0, c) + truth.b(1, c) * truth.z(i) + truth.factors(0, c) * truth.lambda1(i) +
                      truth.factors(1, c) * truth.lambda2(i) + truth.eps(i, c);
    truth.y00_untreated = y(0, t0);
    y(0, t0) = truth.effect + truth.y00_untreated;

    Eigen::MatrixXd z(n, 2);
    z.col(0).setOnes();
    z.col(1) = truth.z;
    std::vector<bool> treated(static_cast<std::size_t>(n), false);
    treated[0] = true;
    return {PanelData(std::move(y), std::move(treated), std::move(z), t0), std::move(truth)};
}

StudyMethod factor_method(std::string label, EstimatorConfig config) {
    validate_config(config);
    return {std::move(label), [config](const PanelData& panel, const DgpTruth&, int) {
                MethodOutcome out;
                try {
                    out.estimate = estimate_att(panel, config).att(0);
                } catch (const std::exception& e) {
                    out.failed = true;
                    out.reason = e.what();
                }
                return out;
            }};
}

StudyMethod did_method() {
    return {"DID", [](const PanelData& panel, const DgpTruth&, int) {
                MethodOutcome out;
                try {
                    out.estimate = did_att(panel)(0);
                } catch (const std::exception& e) {
                    out.failed = true;
                    out.reason = e.what();
                }
                return out;
            }};
}

StudyMethod sc_method(std::string label, bool predictors_ii) {
    PredictorSpec spec;
    spec.kind = predictors_ii ? PredictorKind::half_lags_and_covariates : PredictorKind::all_lags;
    return {std::move(label), [spec](const PanelData& panel, const DgpTruth&, int) {
                MethodOutcome out;
                try {
                    const ScEstimate est = sc_att(panel, spec);
                    out.estimate = est.att(0);
                    if (!est.weights.converged) {
                        out.failed = true;
                        out.reason = "synthetic control solver did not converge";
                    }
                } catch (const std::exception& e) {
                    out.failed = true;
                    out.reason = e.what();
                }
                return out;
            }};
}

StudyMethod builtin_method(const std::string& label) {
    auto ridge = [](Eigen::Index r, DeltaRule rule) {
        EstimatorConfig c;
        c.variant = Variant::ridge;
        c.r_weights = r;
        c.delta_rule = rule;
        return c;
    };
    if (label == "R=2 (no tuning)") {
        EstimatorConfig c;
        c.variant = Variant::pinv;
        c.r_weights = 2;
        return factor_method(label, c);
    }
    if (label == "R=2 (CV)") return factor_method(label, ridge(2, CrossValidation{}));
    if (label == "R=2 (GCV)") return factor_method(label, ridge(2, GeneralizedCrossValidation{}));
    if (label == "R=3 (CV)") return factor_method(label, ridge(3, CrossValidation{}));
    if (label == "R=3 (GCV)") return factor_method(label, ridge(3, GeneralizedCrossValidation{}));
    if (label == "DID") return did_method();
    if (label == "SCM-I") return sc_method(label, false);
    if (label == "SCM-II") return sc_method(label, true);
    throw ValidationError("unknown method '" + label + "'");
}

Summary summarize(const std::vector<double>& estimates, double truth) {
    if (estimates.empty()) throw ValidationError("summarize needs at least one estimate");
    const auto n = static_cast<double>(estimates.size());
    double sum = 0.0;
    for (double e : estimates) sum += e;
    const double mean = sum / n;
    double ss_mean = 0.0;
    double ss_truth = 0.0;
    for (double e : estimates) {
        ss_mean += (e - mean) * (e - mean);
        ss_truth += (e - truth) * (e - truth);
    }
    Summary s;
    s.bias = mean - truth;
    s.sd = estimates.size() > 1 ? std::sqrt(ss_mean / (n - 1.0)) : 0.0;
    s.rmse = std::sqrt(ss_truth / n);
    return s;
}

McResult run_study(const McConfig& config) {
    validate_mc_config(config);
    const std::vector<std::string>& labels = config.methods.empty() ? builtin_method_labels() : config.methods;
    std::vector<StudyMethod> methods;
    methods.reserve(labels.size());
    for (const auto& label : labels) methods.push_back(builtin_method(label));
    McResult result = run_study(config, methods);
    result.config.methods = labels;
    return result;
}

namespace {

struct RepSlot {
    bool kept = false;
    std::vector<double> estimates;
    int failed_attempts = 0;
    std::vector<std::string> failure_reasons;  // "label: reason" per failed attempt
    std::exception_ptr error;
};

}  // namespace

McResult run_study(const McConfig& config, const std::vector<StudyMethod>& methods) {
    validate_mc_config(config);
    if (methods.empty()) throw ValidationError("no methods configured");

    McResult result;
    result.config = config;
    result.config.methods.clear();
    for (const auto& m : methods) result.config.methods.push_back(m.label);
    result.factors = draw_study_factors(config.base_seed, config.t0);
    result.centering_exp = centering_exp();
    result.centering_log = centering_log();

    std::vector<RepSlot> slots(static_cast<std::size_t>(config.reps));
    auto run_rep = [&](int k) {
        RepSlot& slot = slots[static_cast<std::size_t>(k)];
        try {
            for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
                auto [panel, truth] = gen_dgp_panel(config, result.factors, k, attempt);
                std::vector<double> est;
                est.reserve(methods.size());
                bool failed = false;
                for (const auto& m : methods) {
                    const MethodOutcome o = m.run(panel, truth, k);
                    if (o.failed || !std::isfinite(o.estimate)) {
                        slot.failure_reasons.push_back(m.label + ": " +
                                                       (o.failed ? o.reason : std::string("non-finite estimate")));
                        failed = true;
                        break;
                    }
                    est.push_back(o.estimate);
                }
                if (!failed) {
                    slot.kept = true;
                    slot.estimates = std::move(est);
                    return;
                }
                ++slot.failed_attempts;
            }
        } catch (...) {
            slot.error = std::current_exception();
        }
    };

    int jobs = config.jobs > 0 ? config.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    jobs = std::min(jobs, config.reps);
    if (jobs <= 1) {
        for (int k = 0; k < config.reps; ++k) run_rep(k);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(jobs));
        for (int j = 0; j < jobs; ++j)
            workers.emplace_back([&] {
                for (int k = next++; k < config.reps; k = next++) run_rep(k);
            });
        for (auto& w : workers) w.join();
    }

    // Deterministic merge in replication order.
    std::map<std::string, int> reasons;
    result.methods.resize(methods.size());
    for (std::size_t m = 0; m < methods.size(); ++m) result.methods[m].label = methods[m].label;
    for (int k = 0; k < config.reps; ++k) {
        const RepSlot& slot = slots[static_cast<std::size_t>(k)];
        if (slot.error) std::rethrow_exception(slot.error);
        result.dropped += slot.failed_attempts;
        for (const auto& r : slot.failure_reasons) ++reasons[r];
        if (!slot.kept) {
            ++result.lost;
            result.warnings.push_back("replication " + std::to_string(k) + " abandoned after " +
                                      std::to_string(config.max_attempts) + " failed draws");
            continue;
        }
        for (std::size_t m = 0; m < methods.size(); ++m) result.methods[m].estimates.push_back(slot.estimates[m]);
    }
    for (const auto& [reason, count] : reasons)
        result.warnings.push_back(std::to_string(count) + " dropped draw(s): " + reason);

    const int kept = config.reps - result.lost;
    if (kept == 0) throw NumericalError("every replication failed");
    for (auto& m : result.methods) m.summary = summarize(m.estimates, 1.0);
    result.unreliable = result.lost > 0 || result.dropped > kMaxDropShare * config.reps;
    if (result.unreliable)
        result.warnings.push_back("study unreliable: " + std::to_string(result.dropped) + " dropped draws over " +
                                  std::to_string(config.reps) + " replications");
    return result;
}

}  // namespace shortpanel
