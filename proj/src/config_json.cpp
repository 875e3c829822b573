#include "ccs/config_json.hpp"

#include <fstream>
#include <sstream>

#include "ccs/errors.hpp"

namespace ccs {

ModelSpec parse_model_spec(const nlohmann::json& j) {
    ModelSpec spec;
    if (j.contains("intercept")) spec.include_intercept = j["intercept"].get<bool>();
    if (!j.contains("terms") || !j["terms"].is_array()) {
        throw ConfigError("model spec needs a 'terms' array");
    }
    for (const auto& t : j["terms"]) {
        ModelTerm term;
        term.covariate = t.at("name").get<std::string>();
        const std::string type = t.value("type", std::string("linear"));
        if (type == "linear") {
            term.kind = TermKind::Linear;
        } else if (type == "smooth") {
            term.kind = TermKind::Smooth;
            term.df = t.value("df", 4);
            if (term.df < 2) throw ConfigError("smooth df must be >= 2");
        } else {
            throw ConfigError("term type must be 'linear' or 'smooth', got " + type);
        }
        spec.terms.push_back(std::move(term));
    }
    return spec;
}

NuisanceSpecs parse_nuisance_specs(const nlohmann::json& j) {
    NuisanceSpecs specs;
    if (!j.contains("default") && !(j.contains("lambda1") && j.contains("pi1_obs") &&
                                    j.contains("tau"))) {
        throw ConfigError("specs need a 'default' model or all of lambda1/pi1_obs/tau");
    }
    ModelSpec fallback;
    if (j.contains("default")) fallback = parse_model_spec(j["default"]);
    specs.lambda1 = j.contains("lambda1") ? parse_model_spec(j["lambda1"]) : fallback;
    specs.pi1_obs = j.contains("pi1_obs") ? parse_model_spec(j["pi1_obs"]) : fallback;
    specs.tau = j.contains("tau") ? parse_model_spec(j["tau"]) : fallback;
    if (j.contains("ridge")) {
        specs.ridge = j["ridge"].get<double>();
        if (specs.ridge < 0.0) throw ConfigError("ridge must be >= 0");
    }
    return specs;
}

std::pair<Estimand, AssumptionSet> parse_estimand_family(const std::string& text) {
    const std::size_t colon = text.find(':');
    if (colon == std::string::npos) {
        throw ConfigError("estimand must look like mu:a1a2 or nu:a1, got '" + text + "'");
    }
    const std::string estimand = text.substr(0, colon);
    const std::string assumptions = text.substr(colon + 1);
    Estimand e;
    if (estimand == "mu") {
        e = Estimand::Mu;
    } else if (estimand == "nu") {
        e = Estimand::Nu;
    } else {
        throw ConfigError("estimand must be 'mu' or 'nu', got '" + estimand + "'");
    }
    AssumptionSet a;
    if (assumptions == "a1") {
        a = AssumptionSet::A1;
    } else if (assumptions == "a1a2") {
        a = AssumptionSet::A1A2;
    } else if (assumptions == "a1a3") {
        a = AssumptionSet::A1A3;
    } else if (assumptions == "a1a2a3") {
        a = AssumptionSet::A1A2A3;
    } else {
        throw ConfigError("unknown assumption set '" + assumptions + "'");
    }
    validate_request({e, 1, a});
    return {e, a};
}

ColumnMap parse_column_map(const nlohmann::json& j) {
    ColumnMap map;
    if (j.contains("r")) map.r = j["r"].get<std::string>();
    if (j.contains("t")) map.t = j["t"].get<std::string>();
    if (j.contains("y")) map.y = j["y"].get<std::string>();
    if (j.contains("covariates")) {
        for (const auto& [name, column] : j["covariates"].items()) {
            map.covariates[name] = column.get<std::string>();
        }
    }
    return map;
}

ScenarioConfig parse_scenario_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid scenario JSON: ") + e.what());
    }
    ScenarioConfig cfg;
    cfg.study = j.value("study", 3);
    const std::string misspec = j.value("misspec", std::string("a"));
    if (misspec.size() != 1) throw ConfigError("misspec must be a single letter");
    cfg.misspec = misspec[0];
    cfg.n = j.value("n", static_cast<std::uint64_t>(2000));
    cfg.reps = j.value("reps", 500);
    cfg.k = j.value("k", 5);
    cfg.master_seed = j.value("master_seed", static_cast<std::uint64_t>(1));
    cfg.clip.epsilon = j.value("epsilon", 0.01);
    cfg.threads = j.value("threads", 0);
    cfg.literal_delta = j.value("literal_delta_y", false);
    cfg.n_truth = j.value("n_truth", static_cast<std::uint64_t>(1000000));
    if (j.contains("specs")) {
        cfg.specs = parse_nuisance_specs(j["specs"]);
        cfg.specs_set = true;
    }
    validate_scenario(cfg);
    return cfg;
}

ScenarioConfig load_scenario_json(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw ConfigError("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << file.rdbuf();
    return parse_scenario_json(ss.str());
}

}  // namespace ccs
