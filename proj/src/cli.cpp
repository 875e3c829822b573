#include "ccs/cli.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <ostream>

#include "ccs/config_json.hpp"
#include "ccs/diagnostics.hpp"
#include "ccs/errors.hpp"
#include "ccs/report_io.hpp"
#include "ccs/simlab.hpp"

namespace ccs {

namespace {

std::string pct(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * x);
    return buf;
}

std::string human_value(double x, bool as_percent) {
    if (as_percent) return pct(x);
    return fmt6(round6(x));
}

int guard(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const EmptySubgroup& e) {
        // data failing an estimator precondition is an input problem
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

Dataset load_input(const std::string& data_path, const std::string& schema_path,
                   const ColumnMap& map, double pi_t1, OutcomeKind* kind_out = nullptr) {
    if (data_path.empty()) throw ConfigError("--data is required");
    if (schema_path.empty()) throw ConfigError("--schema is required");
    const SchemaFile schema = load_schema_json(schema_path);
    if (kind_out != nullptr) *kind_out = schema.outcome_kind;
    return load_csv(data_path, schema.schema, map, pi_t1, schema.outcome_kind);
}

}  // namespace

int cmd_analyze(const AnalyzeConfig& cfg, std::ostream& out, std::ostream& err) {
    return guard(err, [&]() {
        const Dataset data = load_input(cfg.data_path, cfg.schema_path, cfg.column_map, cfg.pi_t1);
        if (!(cfg.clip.epsilon > 0.0 && cfg.clip.epsilon < 0.5)) {
            throw ConfigError("epsilon must lie in (0, 0.5)");
        }
        if (cfg.k < 1) throw ConfigError("--splits must be >= 1");

        std::vector<std::pair<Estimand, AssumptionSet>> families = cfg.families;
        if (families.empty()) {
            families = {{Estimand::Mu, AssumptionSet::A1A2},
                        {Estimand::Mu, AssumptionSet::A1A3},
                        {Estimand::Mu, AssumptionSet::A1A2A3},
                        {Estimand::Nu, AssumptionSet::A1},
                        {Estimand::Nu, AssumptionSet::A1A2A3}};
        }
        std::vector<EstimandRequest> requests;
        for (const auto& [estimand, assumptions] : families) {
            requests.push_back({estimand, 1, assumptions});
            requests.push_back({estimand, 0, assumptions});
        }

        const NuisanceSpecs specs =
            cfg.specs_set ? cfg.specs : NuisanceSpecs::defaults(data.schema());
        RunOptions options;
        options.fold_mode = cfg.fold_mode;
        options.se_mode = cfg.se_mode;
        options.threads = cfg.threads;
        const RunResult result =
            run_crossfit(data, requests, cfg.k, cfg.seed, specs, cfg.clip, options);

        for (const std::string& warning : result.warnings) err << "warning: " << warning << "\n";

        const bool percent = data.outcome_kind() == OutcomeKind::Binary;
        out << "n=" << data.n() << " K=" << cfg.k << " seed=" << cfg.seed << "\n";
        out << "assumptions  parameter  estimate  se  95% CI\n";
        std::size_t contrast_next = 0;
        for (std::size_t i = 0; i < result.reports.size(); ++i) {
            const EstimateReport& r = result.reports[i];
            out << assumptions_label(r.request.assumptions) << "  "
                << estimand_label(r.request.estimand) << r.request.arm << "  "
                << human_value(r.point, percent) << "  " << human_value(r.se, percent) << "  "
                << human_value(r.ci95.first, percent) << " to "
                << human_value(r.ci95.second, percent) << "\n";
            if (i % 2 == 1 && contrast_next < result.contrasts.size()) {
                const ContrastReport& c = result.contrasts[contrast_next++];
                out << assumptions_label(c.arm1.request.assumptions) << "  "
                    << (c.arm1.request.estimand == Estimand::Mu ? "delta_cc" : "delta_rct")
                    << "  " << human_value(c.delta, percent) << "  " << human_value(c.se, percent)
                    << "  " << human_value(c.ci95.first, percent) << " to "
                    << human_value(c.ci95.second, percent) << "\n";
            }
        }

        if (!cfg.out_csv.empty()) write_text_file(cfg.out_csv, analysis_csv(result));
        if (!cfg.out_json.empty()) {
            write_text_file(cfg.out_json,
                            run_result_to_json(result, data, cfg.clip.epsilon).dump(2) + "\n");
        }
        return kExitOk;
    });
}

int cmd_diagnose(const DiagnoseConfig& cfg, std::ostream& out, std::ostream& err) {
    return guard(err, [&]() {
        const Dataset data = load_input(cfg.data_path, cfg.schema_path, cfg.column_map, cfg.pi_t1);
        const NuisanceSpecs specs =
            cfg.specs_set ? cfg.specs : NuisanceSpecs::defaults(data.schema());

        nlohmann::json j;
        j["n"] = data.n();
        j["arms"] = nlohmann::json::array();
        for (int arm : {1, 0}) {
            const IndependenceTestResult r = test_a2a3(data, arm, specs.tau, specs.ridge);
            out << "arm T=" << arm << ": conditional OR of R " << fmt6(round6(r.or_point))
                << " (95% CI " << fmt6(round6(r.or_ci95.first)) << " to "
                << fmt6(round6(r.or_ci95.second)) << ")"
                << (r.converged ? "" : " [fit did not converge]") << "\n";
            j["arms"].push_back({{"arm", arm},
                                 {"log_or", round6(r.log_or)},
                                 {"se", round6(r.se)},
                                 {"or", round6(r.or_point)},
                                 {"or_ci95", {round6(r.or_ci95.first), round6(r.or_ci95.second)}},
                                 {"converged", r.converged}});
        }
        out << "note: this is a joint test of (A2)+(A3); a rejection cannot be attributed to "
               "one of the two\n";

        NuisanceNeeds needs;
        needs.lambda1 = true;
        needs.pi1_obs = true;
        const std::vector<int> rows = all_rows(data);
        const NuisanceBundle bundle = fit_bundle(data, rows, specs, cfg.clip, needs);
        const PositivityReport pos = positivity_report(data, bundle, cfg.clip);
        auto summary_json = [](const ProbSummary& s) {
            return nlohmann::json{{"min", round6(s.min)},       {"q05", round6(s.q05)},
                                  {"q25", round6(s.q25)},       {"median", round6(s.median)},
                                  {"q75", round6(s.q75)},       {"q95", round6(s.q95)},
                                  {"max", round6(s.max)},       {"clipped", s.clipped}};
        };
        auto summary_line = [&](const char* name, const ProbSummary& s) {
            out << name << ": min " << fmt6(round6(s.min)) << ", median "
                << fmt6(round6(s.median)) << ", max " << fmt6(round6(s.max)) << ", clipped "
                << s.clipped << "/" << pos.n << "\n";
        };
        summary_line("lambda1(x)", pos.lambda1);
        summary_line("pi1(0,x)", pos.pi1_obs);
        summary_line("pi1(x)", pos.pi1_x);
        j["positivity"] = {{"epsilon", round6(pos.epsilon)},
                           {"lambda1", summary_json(pos.lambda1)},
                           {"pi1_obs", summary_json(pos.pi1_obs)},
                           {"pi1_x", summary_json(pos.pi1_x)}};

        if (!cfg.out_json.empty()) write_text_file(cfg.out_json, j.dump(2) + "\n");
        return kExitOk;
    });
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
    return guard(err, [&]() {
        ScenarioConfig cfg = load_scenario_json(args.scenario_path);
        if (args.threads_override >= 0) cfg.threads = args.threads_override;

        std::mutex progress_mutex;
        int last_batch = 0;
        const int batch = std::max(1, cfg.reps / 10);
        cfg.progress = [&](int done, int total) {
            std::lock_guard<std::mutex> lock(progress_mutex);
            if (done >= last_batch + batch || done == total) {
                last_batch = done;
                err << "replicates " << done << "/" << total << "\n";
            }
        };

        const MonteCarloResult result = run_monte_carlo(cfg);
        out << metrics_csv(result.table);
        if (result.table.failures > 0) {
            err << "warning: " << result.table.failures << " replicate(s) failed and were "
                << "excluded\n";
        }
        if (!args.out_csv.empty()) write_text_file(args.out_csv, metrics_csv(result.table));
        if (!args.out_json.empty()) {
            write_text_file(args.out_json,
                            metrics_to_json(result.table, result.truth).dump(2) + "\n");
        }
        return kExitOk;
    });
}

}  // namespace ccs
