#include "shortpanel/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace shortpanel {

namespace {

using nlohmann::json;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(number(v(k)));
    return a;
}

json vector_json(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

json config_json(const EstimatorConfig& config) {
    json c;
    c["variant"] = to_string(config.variant);
    c["R"] = config.r_weights;
    c["delta_rule"] = config.delta_rule ? json(to_string(*config.delta_rule)) : json(nullptr);
    c["weighting"] = config.weighting ? "matrix" : "identity";
    if (config.weighting) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < config.weighting->rows(); ++i)
            rows.push_back(vector_json(Eigen::VectorXd(config.weighting->row(i).transpose())));
        c["W"] = rows;
    }
    if (config.rank_tol) c["rank_tol"] = *config.rank_tol;
    return c;
}

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

}  // namespace

json estimate_to_json(const EstimateResult& result, const EstimatorConfig& config) {
    json j;
    j["schema"] = kReportSchema;
    j["periods"] = result.periods;
    j["att"] = vector_json(result.att);
    j["observed"] = vector_json(result.observed);
    j["counterfactual"] = vector_json(result.counterfactual);
    json fs = json::array();
    for (Eigen::Index c = 0; c < result.f_star.cols(); ++c)
        fs.push_back(vector_json(Eigen::VectorXd(result.f_star.col(c))));
    j["f_star"] = fs;
    j["delta"] = result.delta_used.empty() ? json(nullptr) : vector_json(result.delta_used);
    if (!result.delta_selections.empty()) {
        json sel = json::array();
        for (const auto& s : result.delta_selections) {
            json e;
            e["rule"] = s.rule == TuningRule::cv ? "cv" : "gcv";
            e["chosen"] = number(s.chosen);
            e["grid"] = vector_json(s.grid);
            e["scores"] = vector_json(s.scores);
            if (s.rule == TuningRule::cv) e["skipped_units"] = s.skipped_units;
            sel.push_back(e);
        }
        j["delta_selection"] = sel;
    }
    j["config"] = config_json(config);
    json d;
    d["singular_values"] = vector_json(result.diagnostics.singular_values);
    d["numerical_rank"] = result.diagnostics.numerical_rank;
    d["gram_condition"] = number(result.diagnostics.gram_condition);
    d["weights"] = result.diagnostics.weights_description;
    d["warnings"] = result.diagnostics.warnings;
    j["diagnostics"] = d;
    return j;
}

json inspect_to_json(const InspectReport& report, const EstimatorConfig& config) {
    json j;
    j["schema"] = kReportSchema;
    j["singular_values"] = vector_json(report.singular_values);
    j["numerical_rank"] = report.numerical_rank;
    j["gram_condition"] = number(report.gram_condition);
    j["noise_floor"] = number(report.noise_floor);
    j["suggested_variant"] = to_string(report.suggested);
    j["reason"] = report.reason;
    j["config"] = config_json(config);
    return j;
}

void write_study_csv(std::ostream& out, const McResult& result) {
    out << "method,t0,n,bias,sd,rmse,reps,dropped\n";
    for (const auto& m : result.methods) {
        char line[512];
        std::snprintf(line, sizeof line, "\"%s\",%d,%d,%.17g,%.17g,%.17g,%zu,%d\n", m.label.c_str(), result.config.t0,
                      result.config.n, m.summary.bias, m.summary.sd, m.summary.rmse, m.estimates.size(),
                      result.dropped);
        out << line;
    }
}

json study_to_json(const McResult& result) {
    const McConfig& c = result.config;
    json j;
    j["schema"] = kReportSchema;
    json cfg;
    cfg["t0"] = c.t0;
    cfg["n"] = c.n;
    cfg["reps"] = c.reps;
    cfg["seed"] = c.base_seed;
    cfg["methods"] = c.methods;
    cfg["eps_sd"] = c.noise.eps_sd;
    cfg["treated_eps_sd"] = c.noise.treated_eps_sd;
    cfg["u_sd"] = c.noise.u_sd;
    cfg["max_attempts"] = c.max_attempts;
    j["config"] = cfg;
    json f = json::array();
    for (Eigen::Index r = 0; r < result.factors.f.rows(); ++r)
        f.push_back(vector_json(Eigen::VectorXd(result.factors.f.row(r).transpose())));
    j["factors"] = f;
    j["factor_singular_values"] = vector_json(result.factors.singular_values);
    j["centering"] = {{"exp", result.centering_exp}, {"log", result.centering_log}};
    j["dropped"] = result.dropped;
    j["lost"] = result.lost;
    j["unreliable"] = result.unreliable;
    j["warnings"] = result.warnings;
    json methods = json::array();
    for (const auto& m : result.methods) {
        json e;
        e["method"] = m.label;
        e["bias"] = number(m.summary.bias);
        e["sd"] = number(m.summary.sd);
        e["rmse"] = number(m.summary.rmse);
        e["reps"] = m.estimates.size();
        e["estimates"] = vector_json(m.estimates);
        methods.push_back(e);
    }
    j["methods"] = methods;
    return j;
}

void print_study_table(std::ostream& out, const McResult& result) {
    std::size_t width = 8;
    for (const auto& m : result.methods) width = std::max(width, m.label.size() + 2);
    auto pad = [&](const std::string& s) {
        return std::string(width > s.size() ? width - s.size() : 0, ' ') + s;
    };
    out << "T0=" << result.config.t0 << " N=" << result.config.n << " reps=" << result.config.reps
        << " dropped=" << result.dropped << "\n";
    out << "      ";
    for (const auto& m : result.methods) out << pad(m.label);
    out << "\n";
    auto row = [&](const char* name, double Summary::*field) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "%-6s", name);
        out << buf;
        for (const auto& m : result.methods) out << pad(fmt("%.3f", m.summary.*field));
        out << "\n";
    };
    row("bias", &Summary::bias);
    row("sd", &Summary::sd);
    row("RMSE", &Summary::rmse);
}

}  // namespace shortpanel
