#include "shortpanel/panel.hpp"

#include "shortpanel/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string_view>
#include <unordered_map>

namespace shortpanel {

PanelData::PanelData(Eigen::MatrixXd outcomes, std::vector<bool> treated,
                     Eigen::MatrixXd covariates, int t0,
                     std::vector<std::string> unit_labels)
    : t0_(t0) {
    const Eigen::Index n = outcomes.rows();
    if (n == 0) throw ValidationError("panel has no units");
    if (t0 < 1) throw ValidationError("panel needs at least one pre-treatment period");
    if (outcomes.cols() < t0 + 1)
        throw ValidationError("outcome matrix has fewer columns than T0 + 1");
    if (static_cast<Eigen::Index>(treated.size()) != n)
        throw ValidationError("treated indicator length does not match unit count");
    if (covariates.rows() != n)
        throw ValidationError("covariate rows do not match unit count");
    if (covariates.cols() < 1) throw ValidationError("panel needs at least one covariate column");
    if (!outcomes.allFinite()) throw ValidationError("outcomes contain non-finite values");
    if (!covariates.allFinite()) throw ValidationError("covariates contain non-finite values");
    if (unit_labels.empty()) {
        unit_labels.reserve(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) unit_labels.push_back(std::to_string(i));
    } else if (static_cast<Eigen::Index>(unit_labels.size()) != n) {
        throw ValidationError("unit label count does not match unit count");
    }

    // Stable partition: treated units first.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_partition(order.begin(), order.end(),
                          [&](Eigen::Index i) { return treated[static_cast<std::size_t>(i)]; });
    n_treated_ = std::count(treated.begin(), treated.end(), true);
    if (n_treated_ == n) throw ValidationError("panel has no control units");

    outcomes_.resize(n, outcomes.cols());
    covariates_.resize(n, covariates.cols());
    treated_.resize(static_cast<std::size_t>(n));
    labels_.resize(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto src = order[static_cast<std::size_t>(k)];
        outcomes_.row(k) = outcomes.row(src);
        covariates_.row(k) = covariates.row(src);
        treated_[static_cast<std::size_t>(k)] = treated[static_cast<std::size_t>(src)];
        labels_[static_cast<std::size_t>(k)] = std::move(unit_labels[static_cast<std::size_t>(src)]);
    }
}

Eigen::Index PanelData::column(int period) const {
    if (period < -t0_ || period > t1())
        throw ValidationError("period " + std::to_string(period) + " outside panel range [" +
                              std::to_string(-t0_) + ", " + std::to_string(t1()) + "]");
    return period + t0_;
}

Eigen::VectorXd PanelData::pre_outcomes(Eigen::Index unit) const {
    Eigen::VectorXd out(t0_);
    for (int k = 0; k < t0_; ++k) out(k) = outcomes_(unit, t0_ - 1 - k);
    return out;
}

double gram_condition_number(const Eigen::Ref<const Eigen::MatrixXd>& z) {
    if (z.rows() == 0 || z.cols() == 0) return std::numeric_limits<double>::infinity();
    const Eigen::MatrixXd gram = (z.transpose() * z) / static_cast<double>(z.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

PanelDiagnostics validate(const PanelData& panel) {
    PanelDiagnostics d;
    d.n_units = panel.n_units();
    d.n_treated = panel.n_treated();
    d.n_controls = panel.n_controls();
    d.gram_condition = gram_condition_number(panel.control_covariates());
    d.collinear = !(d.gram_condition <= kCollinearityThreshold);
    d.control_means = panel.control_outcomes().colwise().mean().transpose();
    if (d.collinear) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "control covariate Gram matrix is near singular (condition %.3g > %.0e)",
                      d.gram_condition, kCollinearityThreshold);
        d.warnings.emplace_back(buf);
    }
    if (d.n_treated != 1)
        d.warnings.push_back("panel has " + std::to_string(d.n_treated) +
                             " treated units; estimation requires exactly one");
    return d;
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

[[noreturn]] void fail_at(std::size_t line_no, const std::string& msg) {
    throw ValidationError("line " + std::to_string(line_no) + ": " + msg);
}

double parse_real(std::string_view field, std::size_t line_no, const char* name) {
    double value = 0.0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (field.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value))
        fail_at(line_no, std::string("non-numeric ") + name + " field '" + std::string(field) + "'");
    return value;
}

long parse_int(std::string_view field, std::size_t line_no, const char* name) {
    long value = 0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (field.empty() || ec != std::errc{} || ptr != end)
        fail_at(line_no, std::string("non-integer ") + name + " field '" + std::string(field) + "'");
    return value;
}

struct UnitRows {
    bool treated = false;
    std::vector<double> covariates;
    std::map<long, double> outcome_by_time;
};

}  // namespace

PanelData load_panel_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ValidationError("empty panel CSV");
    ++line_no;
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM

    const auto header = split_fields(line);
    if (header.size() < 4 || header[0] != "unit" || header[1] != "time" ||
        header[2] != "treated" || header[3] != "y")
        throw ValidationError("header must start with unit,time,treated,y");
    const std::size_t d = header.size() - 4;
    if (d == 0) throw ValidationError("panel CSV has no covariate columns (expected z1..zd)");
    for (std::size_t k = 0; k < d; ++k) {
        if (header[4 + k] != "z" + std::to_string(k + 1))
            throw ValidationError("covariate column " + std::to_string(k + 1) + " must be named z" +
                                  std::to_string(k + 1));
    }

    std::vector<std::string> unit_order;
    std::unordered_map<std::string, UnitRows> units;
    long min_time = std::numeric_limits<long>::max();
    long max_time = std::numeric_limits<long>::min();

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size())
            fail_at(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(fields.size()));
        const std::string unit(fields[0]);
        if (unit.empty()) fail_at(line_no, "empty unit identifier");
        const long time = parse_int(fields[1], line_no, "time");
        const long treated_flag = parse_int(fields[2], line_no, "treated");
        if (treated_flag != 0 && treated_flag != 1) fail_at(line_no, "treated must be 0 or 1");
        const double y = parse_real(fields[3], line_no, "y");
        std::vector<double> z(d);
        for (std::size_t k = 0; k < d; ++k) z[k] = parse_real(fields[4 + k], line_no, "covariate");

        auto [it, inserted] = units.try_emplace(unit);
        UnitRows& rows = it->second;
        if (inserted) {
            unit_order.push_back(unit);
            rows.treated = treated_flag == 1;
            rows.covariates = z;
        } else {
            if (rows.treated != (treated_flag == 1))
                fail_at(line_no, "treated flag varies within unit '" + unit + "'");
            if (rows.covariates != z)
                fail_at(line_no, "covariates vary within unit '" + unit + "' (must be time-invariant)");
        }
        if (!rows.outcome_by_time.emplace(time, y).second)
            fail_at(line_no, "duplicate row for unit '" + unit + "' at time " + std::to_string(time));
        min_time = std::min(min_time, time);
        max_time = std::max(max_time, time);
    }
    if (units.empty()) throw ValidationError("panel CSV has no data rows");
    if (min_time >= 0) throw ValidationError("panel has no pre-treatment periods (times must include negatives)");
    if (max_time < 0) throw ValidationError("panel has no post-treatment periods (times must include 0)");

    const long n_periods = max_time - min_time + 1;
    const auto n = static_cast<Eigen::Index>(unit_order.size());
    Eigen::MatrixXd outcomes(n, n_periods);
    Eigen::MatrixXd covariates(n, static_cast<Eigen::Index>(d));
    std::vector<bool> treated(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const UnitRows& rows = units.at(unit_order[static_cast<std::size_t>(i)]);
        if (static_cast<long>(rows.outcome_by_time.size()) != n_periods)
            throw ValidationError("unbalanced panel: unit '" + unit_order[static_cast<std::size_t>(i)] +
                                  "' has " + std::to_string(rows.outcome_by_time.size()) + " of " +
                                  std::to_string(n_periods) + " periods");
        for (const auto& [time, y] : rows.outcome_by_time) outcomes(i, time - min_time) = y;
        for (std::size_t k = 0; k < d; ++k) covariates(i, static_cast<Eigen::Index>(k)) = rows.covariates[k];
        treated[static_cast<std::size_t>(i)] = rows.treated;
    }
    return PanelData(std::move(outcomes), std::move(treated), std::move(covariates),
                     static_cast<int>(-min_time), std::move(unit_order));
}

PanelData load_panel_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open panel CSV '" + path.string() + "'");
    return load_panel_csv(in);
}

void write_panel_csv(std::ostream& out, const PanelData& panel) {
    out << "unit,time,treated,y";
    for (Eigen::Index k = 0; k < panel.n_covariates(); ++k) out << ",z" << (k + 1);
    out << '\n';
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (Eigen::Index i = 0; i < panel.n_units(); ++i) {
        for (int t = -panel.t0(); t <= panel.t1(); ++t) {
            out << panel.unit_labels()[static_cast<std::size_t>(i)] << ',' << t << ','
                << (panel.treated()[static_cast<std::size_t>(i)] ? 1 : 0) << ',';
            put(panel.outcome(i, t));
            for (Eigen::Index k = 0; k < panel.n_covariates(); ++k) {
                out << ',';
                put(panel.covariates()(i, k));
            }
            out << '\n';
        }
    }
}

}  // namespace shortpanel
