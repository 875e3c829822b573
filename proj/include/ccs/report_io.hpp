#pragma once

#include <string>

#include <json.hpp>

#include "ccs/estimators.hpp"
#include "ccs/simlab.hpp"

namespace ccs {

// Fixed 6-significant-digit printing; the JSON stores the same rounded value
// the CSV prints, so the two never drift.
std::string fmt6(double x);
double round6(double x);

nlohmann::json estimate_to_json(const EstimateReport& report);
nlohmann::json contrast_to_json(const ContrastReport& report);
nlohmann::json run_result_to_json(const RunResult& result, const Dataset& d, double epsilon);

// Table-3-shaped CSV: assumptions, parameter, estimate, se, ci_lo, ci_hi.
std::string analysis_csv(const RunResult& result);

nlohmann::json metrics_to_json(const MetricsTable& table, const TruthValues& truth);

// Panel CSV in the Tables 4-6 column order: bias, mean SE, SD, coverage, rmse.
std::string metrics_csv(const MetricsTable& table);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace ccs
