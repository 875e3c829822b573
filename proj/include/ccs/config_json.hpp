#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ccs/dataset.hpp"
#include "ccs/estimators.hpp"
#include "ccs/nuisance.hpp"
#include "ccs/simlab.hpp"

namespace ccs {

// Term lists look like
//   {"terms": [{"name":"age","type":"smooth","df":4},
//              {"name":"sex","type":"linear"}], "intercept": true}
ModelSpec parse_model_spec(const nlohmann::json& j);

// {"default": {...}, "lambda1": {...}, "pi1_obs": {...}, "tau": {...},
//  "ridge": 1e-6}
NuisanceSpecs parse_nuisance_specs(const nlohmann::json& j);

// "mu:a1a2" | "mu:a1a3" | "mu:a1a2a3" | "nu:a1" | "nu:a1a2a3"
std::pair<Estimand, AssumptionSet> parse_estimand_family(const std::string& text);

ColumnMap parse_column_map(const nlohmann::json& j);

ScenarioConfig parse_scenario_json(const std::string& text);
ScenarioConfig load_scenario_json(const std::string& path);

}  // namespace ccs
