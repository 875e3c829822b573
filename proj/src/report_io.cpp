#include "ccs/report_io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ccs/errors.hpp"

namespace ccs {

std::string fmt6(double x) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

double round6(double x) { return std::strtod(fmt6(x).c_str(), nullptr); }

namespace {

nlohmann::json ci_json(const std::pair<double, double>& ci) {
    return nlohmann::json::array({round6(ci.first), round6(ci.second)});
}

std::string se_mode_label(ContrastSeMode mode) {
    return mode == ContrastSeMode::IFDifference ? "if-difference" : "independent-arms";
}

std::string delta_label(Estimand e) { return e == Estimand::Mu ? "delta_cc" : "delta_rct"; }

std::string parameter_label(const EstimandRequest& request) {
    return estimand_label(request.estimand) + std::to_string(request.arm);
}

}  // namespace

nlohmann::json estimate_to_json(const EstimateReport& report) {
    nlohmann::json j;
    j["estimand"] = estimand_label(report.request.estimand);
    j["arm"] = report.request.arm;
    j["assumptions"] = assumptions_label(report.request.assumptions);
    j["point"] = round6(report.point);
    j["se"] = round6(report.se);
    j["ci95"] = ci_json(report.ci95);
    j["n"] = report.n;
    j["k"] = report.k;
    j["seed"] = report.seed;
    j["nuisance_converged"] = report.nuisance_converged;
    nlohmann::json folds = nlohmann::json::array();
    for (const FoldContribution& fc : report.per_fold) {
        folds.push_back({{"fold", fc.fold},
                         {"point", round6(fc.fold_point)},
                         {"sq_sum", round6(fc.fold_sq_sum)},
                         {"n", fc.n_rows}});
    }
    j["per_fold"] = std::move(folds);
    return j;
}

nlohmann::json contrast_to_json(const ContrastReport& report) {
    nlohmann::json j;
    j["estimand"] = estimand_label(report.arm1.request.estimand);
    j["assumptions"] = assumptions_label(report.arm1.request.assumptions);
    j["parameter"] = delta_label(report.arm1.request.estimand);
    j["delta"] = round6(report.delta);
    j["se"] = round6(report.se);
    j["ci95"] = ci_json(report.ci95);
    j["se_mode"] = se_mode_label(report.se_mode);
    return j;
}

nlohmann::json run_result_to_json(const RunResult& result, const Dataset& d, double epsilon) {
    nlohmann::json j;
    j["n"] = d.n();
    j["k"] = result.plan.k;
    j["seed"] = result.plan.seed;
    j["pi_t1"] = round6(d.pi_t1());
    j["epsilon"] = round6(epsilon);
    j["estimates"] = nlohmann::json::array();
    for (const EstimateReport& report : result.reports) {
        j["estimates"].push_back(estimate_to_json(report));
    }
    j["contrasts"] = nlohmann::json::array();
    for (const ContrastReport& contrast : result.contrasts) {
        j["contrasts"].push_back(contrast_to_json(contrast));
    }
    j["warnings"] = result.warnings;
    return j;
}

std::string analysis_csv(const RunResult& result) {
    std::ostringstream out;
    out << "assumptions,parameter,estimate,se,ci_lo,ci_hi\n";
    std::vector<std::pair<Estimand, AssumptionSet>> seen;
    auto emit_report = [&](const EstimateReport& r) {
        out << assumptions_label(r.request.assumptions) << ',' << parameter_label(r.request)
            << ',' << fmt6(round6(r.point)) << ',' << fmt6(round6(r.se)) << ','
            << fmt6(round6(r.ci95.first)) << ',' << fmt6(round6(r.ci95.second)) << '\n';
    };
    for (const EstimateReport& report : result.reports) {
        const std::pair<Estimand, AssumptionSet> key{report.request.estimand,
                                                     report.request.assumptions};
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(key);
        const EstimateReport* arms[2] = {nullptr, nullptr};
        for (const EstimateReport& other : result.reports) {
            if (other.request.estimand != key.first || other.request.assumptions != key.second) {
                continue;
            }
            if (arms[other.request.arm] == nullptr) arms[other.request.arm] = &other;
        }
        if (arms[1] != nullptr) emit_report(*arms[1]);
        if (arms[0] != nullptr) emit_report(*arms[0]);
        for (const ContrastReport& contrast : result.contrasts) {
            if (contrast.arm1.request.estimand != key.first ||
                contrast.arm1.request.assumptions != key.second) {
                continue;
            }
            out << assumptions_label(key.second) << ',' << delta_label(key.first) << ','
                << fmt6(round6(contrast.delta)) << ',' << fmt6(round6(contrast.se)) << ','
                << fmt6(round6(contrast.ci95.first)) << ',' << fmt6(round6(contrast.ci95.second))
                << '\n';
        }
    }
    return out.str();
}

nlohmann::json metrics_to_json(const MetricsTable& table, const TruthValues& truth) {
    nlohmann::json j;
    j["study"] = table.study;
    j["misspec"] = std::string(1, table.misspec);
    j["n"] = table.n;
    j["reps_requested"] = table.reps_requested;
    j["reps_used"] = table.reps_used;
    j["failures"] = table.failures;
    j["master_seed"] = table.master_seed;
    j["truth"] = {{"mu1", round6(truth.mu[1])},
                  {"mu0", round6(truth.mu[0])},
                  {"nu1", round6(truth.nu[1])},
                  {"nu0", round6(truth.nu[0])}};
    j["rows"] = nlohmann::json::array();
    for (const MetricsRow& row : table.rows) {
        j["rows"].push_back({{"parameter", row.parameter},
                             {"estimator", row.estimator},
                             {"truth", round6(row.truth)},
                             {"bias", round6(row.bias)},
                             {"mean_se", round6(row.mean_se)},
                             {"sd", round6(row.sd)},
                             {"coverage95", round6(row.coverage95)},
                             {"rmse", round6(row.rmse)},
                             {"reps", row.reps},
                             {"sd_defined", row.sd_defined}});
    }
    return j;
}

std::string metrics_csv(const MetricsTable& table) {
    std::ostringstream out;
    out << "study,misspec,parameter,estimator,bias,mean_se,sd,coverage95,rmse,truth,reps\n";
    for (const MetricsRow& row : table.rows) {
        out << table.study << ',' << table.misspec << ',' << row.parameter << ','
            << row.estimator << ',' << fmt6(round6(row.bias)) << ',' << fmt6(round6(row.mean_se))
            << ',' << fmt6(round6(row.sd)) << ',' << fmt6(round6(row.coverage95)) << ','
            << fmt6(round6(row.rmse)) << ',' << fmt6(round6(row.truth)) << ',' << row.reps
            << '\n';
    }
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw ConfigError("cannot open output file: " + path);
    file << content;
}

}  // namespace ccs
