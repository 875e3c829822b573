#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ccs/dataset.hpp"
#include "ccs/estimators.hpp"
#include "ccs/nuisance.hpp"

namespace ccs {

// Exit codes: 0 success, 2 configuration/validation error, 3 estimation error.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct AnalyzeConfig {
    std::string data_path;
    std::string schema_path;
    ColumnMap column_map;
    double pi_t1 = 0.5;
    // empty: all five estimator families, both arms
    std::vector<std::pair<Estimand, AssumptionSet>> families;
    int k = 5;
    std::uint64_t seed = 1;
    ClipPolicy clip;
    NuisanceSpecs specs;
    bool specs_set = false;
    FoldMode fold_mode = FoldMode::Balanced;
    ContrastSeMode se_mode = ContrastSeMode::IFDifference;
    std::string out_json;
    std::string out_csv;
    int threads = 0;
};

int cmd_analyze(const AnalyzeConfig& cfg, std::ostream& out, std::ostream& err);

struct DiagnoseConfig {
    std::string data_path;
    std::string schema_path;
    ColumnMap column_map;
    double pi_t1 = 0.5;
    ClipPolicy clip;
    NuisanceSpecs specs;
    bool specs_set = false;
    std::string out_json;
};

int cmd_diagnose(const DiagnoseConfig& cfg, std::ostream& out, std::ostream& err);

struct SimulateArgs {
    std::string scenario_path;
    std::string out_csv;
    std::string out_json;
    int threads_override = -1;  // -1: use the scenario's value
};

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);

}  // namespace ccs
