#include "shortpanel/cli.hpp"

#include "shortpanel/errors.hpp"
#include "shortpanel/factor_att.hpp"
#include "shortpanel/monte_carlo.hpp"
#include "shortpanel/panel.hpp"
#include "shortpanel/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace shortpanel {

namespace {

struct EstimateArgs {
    std::string input;
    std::string output = "-";
    std::string variant;
    int r = 2;
    std::optional<int> t_post;
    std::string delta;
    std::string weights = "identity";
    std::optional<double> rank_tol;
};

struct SimulateArgs {
    int t0 = 5;
    int n = 100;
    int reps = 500;
    std::uint64_t seed = 1;
    int jobs = 0;
    std::string methods = "all";
    std::string output;
    std::string json_output;
    double eps_sd = 1.0;
    double treated_eps_sd = 1.0;
    double u_sd = 0.2;
};

Eigen::MatrixXd read_weighting(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open weighting matrix file '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        std::vector<double> row;
        std::string tok;
        while (ls >> tok) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ValidationError("non-numeric entry '" + tok + "' in weighting matrix file");
            }
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError("weighting matrix file is empty");
    const auto r = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd w(r, r);
    for (Eigen::Index i = 0; i < r; ++i) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != r)
            throw ValidationError("weighting matrix must be square");
        for (Eigen::Index j = 0; j < r; ++j) w(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return w;
}

EstimatorConfig build_config(const EstimateArgs& a, bool delta_allowed) {
    EstimatorConfig c;
    c.r_weights = a.r;
    if (a.variant.empty())
        c.variant = a.delta.empty() ? Variant::pinv : Variant::ridge;
    else if (a.variant == "pinv")
        c.variant = Variant::pinv;
    else if (a.variant == "ridge")
        c.variant = Variant::ridge;
    else
        throw ValidationError("--variant must be pinv or ridge");
    if (!a.delta.empty() && delta_allowed) {
        if (a.delta == "cv") {
            c.delta_rule = CrossValidation{};
        } else if (a.delta == "gcv") {
            c.delta_rule = GeneralizedCrossValidation{};
        } else {
            double v = 0.0;
            try {
                std::size_t used = 0;
                v = std::stod(a.delta, &used);
                if (used != a.delta.size()) throw std::invalid_argument(a.delta);
            } catch (const std::exception&) {
                throw ValidationError("--delta must be a positive number, cv or gcv");
            }
            c.delta_rule = FixedDelta{v};
        }
    }
    if (a.weights != "identity") c.weighting = read_weighting(a.weights);
    c.rank_tol = a.rank_tol;
    validate_config(c);
    return c;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot write output file '" + path + "'");
    f << text;
}

std::vector<std::string> split_methods(const std::string& spec) {
    if (spec.empty() || spec == "all") return builtin_method_labels();
    std::vector<std::string> labels;
    std::string item;
    std::istringstream in(spec);
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(' ');
        const auto e = item.find_last_not_of(' ');
        if (b == std::string::npos) continue;
        labels.push_back(item.substr(b, e - b + 1));
    }
    if (labels.empty()) throw ValidationError("--methods is empty");
    return labels;
}

int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
    const EstimatorConfig config = build_config(a, true);
    const PanelData panel = load_panel_csv(std::filesystem::path(a.input));
    EstimateResult result = estimate_att(panel, config);
    if (a.t_post) {
        const int t = *a.t_post;
        if (t < 0 || t > panel.t1())
            throw ValidationError("--t-post must be between 0 and " + std::to_string(panel.t1()));
        EstimateResult one;
        one.periods = {t};
        one.observed = result.observed.segment(t, 1);
        one.counterfactual = result.counterfactual.segment(t, 1);
        one.att = result.att.segment(t, 1);
        one.f_star = result.f_star.col(t);
        if (!result.delta_used.empty()) one.delta_used = {result.delta_used[static_cast<std::size_t>(t)]};
        if (!result.delta_selections.empty())
            one.delta_selections = {result.delta_selections[static_cast<std::size_t>(t)]};
        one.diagnostics = result.diagnostics;
        result = std::move(one);
    }
    emit(a.output, estimate_to_json(result, config).dump(2) + "\n", out);
    return kExitOk;
}

int cmd_inspect(const EstimateArgs& a, std::ostream& out) {
    EstimateArgs pinv = a;
    pinv.variant = "pinv";
    const EstimatorConfig config = build_config(pinv, false);
    const PanelData panel = load_panel_csv(std::filesystem::path(a.input));
    const PanelDiagnostics diag = validate(panel);
    const InspectReport report = inspect_panel(panel, config);

    if (!a.output.empty() && a.output != "-") {
        nlohmann::json j = inspect_to_json(report, config);
        j["warnings"] = diag.warnings;
        emit(a.output, j.dump(2) + "\n", out);
    }
    char buf[128];
    out << "units " << diag.n_units << " (controls " << diag.n_controls << "), T0=" << panel.t0()
        << ", T1=" << panel.t1() << ", R=" << config.r_weights << "\n";
    std::snprintf(buf, sizeof buf, "gram condition number: %.6g\n", report.gram_condition);
    out << buf;
    out << "singular values of W^1/2 Omega:";
    for (Eigen::Index k = 0; k < report.singular_values.size(); ++k) {
        std::snprintf(buf, sizeof buf, " %.17g", report.singular_values(k));
        out << buf;
    }
    out << "\n";
    if (report.singular_values.size() > 0 && report.singular_values(0) > 0.0) {
        const Eigen::Index q = report.singular_values.size() - 1;
        std::snprintf(buf, sizeof buf, "sigma_min/sigma_max: %.6g\n",
                      report.singular_values(q) / report.singular_values(0));
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "noise floor: %.6g\n", report.noise_floor);
    out << buf;
    out << "numerical rank: " << report.numerical_rank << "\n";
    out << "suggested variant: " << to_string(report.suggested) << " (" << report.reason << ")\n";
    for (const auto& w : diag.warnings) out << "warning: " << w << "\n";
    return kExitOk;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
    McConfig config;
    config.t0 = a.t0;
    config.n = a.n;
    config.reps = a.reps;
    config.base_seed = a.seed;
    config.jobs = a.jobs;
    config.methods = split_methods(a.methods);
    config.noise.eps_sd = a.eps_sd;
    config.noise.treated_eps_sd = a.treated_eps_sd;
    config.noise.u_sd = a.u_sd;
    validate_mc_config(config);

    const McResult result = run_study(config);
    if (!a.output.empty()) {
        std::ostringstream csv;
        write_study_csv(csv, result);
        emit(a.output, csv.str(), out);
    }
    std::string json_path = a.json_output;
    if (json_path.empty() && !a.output.empty() && a.output != "-")
        json_path = std::filesystem::path(a.output).replace_extension(".json").string();
    if (!json_path.empty()) emit(json_path, study_to_json(result).dump(2) + "\n", out);
    if (a.output != "-") print_study_table(out, result);
    for (const auto& w : result.warnings) err << "warning: " << w << "\n";
    return result.unreliable ? kExitUnreliable : kExitOk;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Flat `key = value` file; keys are long option names without the leading
// dashes ('_' and '-' are interchangeable). Blank lines, '#'/';' comments and
// [section] headers are ignored. Keys also given as flags are skipped, so
// flags win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::string path;
    for (std::size_t k = 0; k < args.size(); ++k) {
        if (args[k] == "--config" && k + 1 < args.size()) path = args[k + 1];
        if (args[k].rfind("--config=", 0) == 0) path = args[k].substr(9);
    }
    if (path.empty()) return args;
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    auto given = [&](const std::string& flag) {
        for (const auto& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        return false;
    };
    std::vector<std::string> out = args;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';' || t[0] == '[') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        std::replace(key.begin(), key.end(), '_', '-');
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
            value = value.substr(1, value.size() - 2);
        if (key.empty() || key == "config") continue;
        const std::string flag = "--" + key;
        if (!given(flag)) {
            out.push_back(flag);
            out.push_back(value);
        }
    }
    return out;
}

void add_estimator_options(CLI::App* sub, EstimateArgs& a, bool with_delta) {
    sub->add_option("--input", a.input, "panel CSV (unit,time,treated,y,z1..zd)")->required();
    sub->add_option("--output", a.output, "report path ('-' for stdout)");
    sub->add_option("--R", a.r, "number of weight functions")->check(CLI::PositiveNumber);
    sub->add_option("--weights", a.weights, "'identity' or a file holding the R x R weighting matrix");
    sub->add_option("--rank-tol", a.rank_tol, "relative singular-value cutoff for the pseudoinverse");
    if (with_delta) {
        sub->add_option("--variant", a.variant, "pinv or ridge")->check(CLI::IsMember({"pinv", "ridge"}));
        sub->add_option("--delta", a.delta, "ridge parameter: a positive value, cv or gcv");
        sub->add_option("--t-post", a.t_post, "report a single post period");
    }
    sub->add_option("--config", "flat key = value file; flags override it");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Factor-model treatment effects for short panels", "shortpanel"};
    app.require_subcommand(1);

    EstimateArgs est;
    auto* estimate = app.add_subcommand("estimate", "estimate the ATT for the treated unit of a panel");
    add_estimator_options(estimate, est, true);

    EstimateArgs insp;
    insp.output.clear();
    auto* inspect = app.add_subcommand("inspect", "rank diagnostics of the moment matrix");
    add_estimator_options(inspect, insp, false);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo study of the estimators");
    simulate->add_option("--t0", sim.t0, "pre-treatment periods");
    simulate->add_option("--n", sim.n, "units including the treated one");
    simulate->add_option("--reps", sim.reps, "replications");
    simulate->add_option("--seed", sim.seed, "base seed");
    simulate->add_option("--jobs", sim.jobs, "worker threads (0 = all cores)");
    simulate->add_option("--methods", sim.methods, "comma-separated method labels, or 'all'");
    simulate->add_option("--output", sim.output, "results CSV ('-' for stdout)");
    simulate->add_option("--json", sim.json_output, "results JSON (default: CSV path with .json)");
    simulate->add_option("--eps-sd", sim.eps_sd, "sd of control outcome noise");
    simulate->add_option("--treated-eps-sd", sim.treated_eps_sd, "sd of treated outcome noise");
    simulate->add_option("--u-sd", sim.u_sd, "sd of the loading noise");
    simulate->add_option("--config", "flat key = value file; flags override it");

    std::vector<std::string> full;
    try {
        full = expand_config(args);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    try {
        std::vector<std::string> rev(full.rbegin(), full.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        if (estimate->parsed()) return cmd_estimate(est, out);
        if (inspect->parsed()) return cmd_inspect(insp, out);
        if (simulate->parsed()) return cmd_simulate(sim, out, err);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}

}  // namespace shortpanel
