#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ccs/cli.hpp"
#include "ccs/config_json.hpp"
#include "ccs/errors.hpp"

namespace {

// --seed wins over CCS_SEED wins over the default.
std::uint64_t resolve_seed(bool seed_given, std::uint64_t seed_flag) {
    if (seed_given) return seed_flag;
    if (const char* env = std::getenv("CCS_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ccs::ConfigError(std::string("CCS_SEED is not an integer: ") + env);
        }
    }
    return 1;
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw ccs::ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << file.rdbuf();
    try {
        return nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::exception& e) {
        throw ccs::ConfigError(std::string("invalid config JSON: ") + e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-fitted estimators of comprehensive-cohort and randomized-trial causal "
                 "effects"};
    app.require_subcommand(1);

    // ---- analyze ----
    ccs::AnalyzeConfig analyze;
    std::vector<std::string> estimand_flags;
    std::string analyze_config_path;
    std::string se_mode_flag = "if-difference";
    std::string fold_mode_flag = "balanced";
    std::uint64_t seed_flag = 1;
    bool seed_given = false;

    CLI::App* cmd_analyze = app.add_subcommand("analyze", "Estimate causal effects from a CSV");
    cmd_analyze->add_option("--data", analyze.data_path, "Input CSV");
    cmd_analyze->add_option("--schema", analyze.schema_path, "JSON schema descriptor");
    cmd_analyze->add_option("--pi-t1", analyze.pi_t1,
                            "Known randomization probability P[T=1|R=1]");
    cmd_analyze->add_option("--estimand", estimand_flags,
                            "Estimator family, e.g. mu:a1a2 (repeatable; default all five)");
    cmd_analyze->add_option("--splits", analyze.k, "Number of sample splits K");
    cmd_analyze
        ->add_option("--seed", seed_flag, "Fold-plan seed (falls back to CCS_SEED, then 1)")
        ->each([&](const std::string&) { seed_given = true; });
    cmd_analyze->add_option("--epsilon", analyze.clip.epsilon, "Probability clipping bound");
    cmd_analyze->add_option("--se-mode", se_mode_flag,
                            "Contrast SE: if-difference | independent-arms");
    cmd_analyze->add_option("--fold-mode", fold_mode_flag, "balanced | multinomial");
    cmd_analyze->add_option("--out-json", analyze.out_json, "Full JSON report path");
    cmd_analyze->add_option("--out-csv", analyze.out_csv, "Summary table CSV path");
    cmd_analyze->add_option("--threads", analyze.threads, "Worker cap (0 = hardware)");
    cmd_analyze->add_option("--config", analyze_config_path,
                            "JSON with column_map / specs / defaults");

    // ---- diagnose ----
    ccs::DiagnoseConfig diagnose;
    std::string diagnose_config_path;
    CLI::App* cmd_diagnose =
        app.add_subcommand("diagnose", "Test (A2)+(A3) and report positivity");
    cmd_diagnose->add_option("--data", diagnose.data_path, "Input CSV");
    cmd_diagnose->add_option("--schema", diagnose.schema_path, "JSON schema descriptor");
    cmd_diagnose->add_option("--pi-t1", diagnose.pi_t1, "Known randomization probability");
    cmd_diagnose->add_option("--epsilon", diagnose.clip.epsilon, "Probability clipping bound");
    cmd_diagnose->add_option("--out-json", diagnose.out_json, "JSON report path");
    cmd_diagnose->add_option("--config", diagnose_config_path,
                             "JSON with column_map / specs");

    // ---- simulate ----
    ccs::SimulateArgs simulate;
    CLI::App* cmd_simulate =
        app.add_subcommand("simulate", "Run a Monte Carlo scenario from a JSON config");
    cmd_simulate->add_option("scenario", simulate.scenario_path, "Scenario JSON")->required();
    cmd_simulate->add_option("--out-csv", simulate.out_csv, "Metrics CSV path");
    cmd_simulate->add_option("--out-json", simulate.out_json, "Metrics JSON path");
    cmd_simulate->add_option("--threads", simulate.threads_override, "Worker cap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : ccs::kExitConfig;
    }

    try {
        if (cmd_analyze->parsed()) {
            analyze.seed = resolve_seed(seed_given, seed_flag);
            if (se_mode_flag == "independent-arms") {
                analyze.se_mode = ccs::ContrastSeMode::IndependentArms;
            } else if (se_mode_flag != "if-difference") {
                throw ccs::ConfigError("--se-mode must be if-difference or independent-arms");
            }
            if (fold_mode_flag == "multinomial") {
                analyze.fold_mode = ccs::FoldMode::Multinomial;
            } else if (fold_mode_flag != "balanced") {
                throw ccs::ConfigError("--fold-mode must be balanced or multinomial");
            }
            for (const std::string& flag : estimand_flags) {
                analyze.families.push_back(ccs::parse_estimand_family(flag));
            }
            if (!analyze_config_path.empty()) {
                const nlohmann::json j = load_json_file(analyze_config_path);
                if (j.contains("column_map")) {
                    analyze.column_map = ccs::parse_column_map(j["column_map"]);
                }
                if (j.contains("specs")) {
                    analyze.specs = ccs::parse_nuisance_specs(j["specs"]);
                    analyze.specs_set = true;
                }
                if (j.contains("pi_t1") && cmd_analyze->count("--pi-t1") == 0) {
                    analyze.pi_t1 = j["pi_t1"].get<double>();
                }
            }
            return ccs::cmd_analyze(analyze, std::cout, std::cerr);
        }
        if (cmd_diagnose->parsed()) {
            if (!diagnose_config_path.empty()) {
                const nlohmann::json j = load_json_file(diagnose_config_path);
                if (j.contains("column_map")) {
                    diagnose.column_map = ccs::parse_column_map(j["column_map"]);
                }
                if (j.contains("specs")) {
                    diagnose.specs = ccs::parse_nuisance_specs(j["specs"]);
                    diagnose.specs_set = true;
                }
                if (j.contains("pi_t1") && cmd_diagnose->count("--pi-t1") == 0) {
                    diagnose.pi_t1 = j["pi_t1"].get<double>();
                }
            }
            return ccs::cmd_diagnose(diagnose, std::cout, std::cerr);
        }
        return ccs::cmd_simulate(simulate, std::cout, std::cerr);
    } catch (const ccs::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ccs::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ccs::kExitRuntime;
    }
}
