#pragma once

#include "shortpanel/factor_att.hpp"
#include "shortpanel/monte_carlo.hpp"
#include "shortpanel/types.hpp"

#include <json.hpp>

#include <ostream>
#include <string>

namespace shortpanel {

inline constexpr int kReportSchema = 1;

/// {"schema", "periods", "att", "observed", "counterfactual", "f_star",
/// "delta", "config", "diagnostics"}. f_star[t] lists F*_t ordered from
/// period -1 back to -T0; non-finite numbers become null.
nlohmann::json estimate_to_json(const EstimateResult& result, const EstimatorConfig& config);

nlohmann::json inspect_to_json(const InspectReport& report, const EstimatorConfig& config);

/// method,t0,n,bias,sd,rmse,reps,dropped (reps = replications kept).
void write_study_csv(std::ostream& out, const McResult& result);

/// Config echo, factor values and singular values, centering constants,
/// per-method summaries and per-replication estimates.
nlohmann::json study_to_json(const McResult& result);

/// bias / sd / RMSE rows with one column per method label.
void print_study_table(std::ostream& out, const McResult& result);

}  // namespace shortpanel
