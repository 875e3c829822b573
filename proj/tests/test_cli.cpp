#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ccs/cli.hpp"
#include "ccs/config_json.hpp"
#include "ccs/dataset.hpp"
#include "ccs/report_io.hpp"
#include "ccs/simlab.hpp"

using namespace ccs;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("ccs_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    f << content;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(CCS_CLI_PATH) + " " + args + " >/dev/null 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

const char* kToyCsv =
    "x,R,T,Y\n"
    "0.1,1,1,1\n"
    "0.2,1,0,0\n"
    "0.3,0,1,1\n"
    "0.4,0,0,1\n"
    "0.5,1,1,0\n"
    "0.6,0,1,0\n"
    "0.7,1,0,1\n"
    "0.8,0,0,0\n";

const char* kToySchema = R"({
    "outcome": "binary",
    "covariates": [{"name": "x", "kind": "continuous"}]
})";

const char* kToyConfig = R"({
    "specs": {"default": {"terms": [{"name": "x", "type": "linear"}]}}
})";

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("analyze toy data matches library-level results exactly") {
        TempDir dir;
        write_file(dir.file("toy.csv"), kToyCsv);
        write_file(dir.file("schema.json"), kToySchema);
        write_file(dir.file("config.json"), kToyConfig);

        const std::string out_json = dir.file("report.json");
        const std::string out_csv = dir.file("report.csv");
        const int code = run_cli("analyze --data " + dir.file("toy.csv") + " --schema " +
                                 dir.file("schema.json") + " --config " + dir.file("config.json") +
                                 " --pi-t1 0.5 --splits 1 --seed 7 --out-json " + out_json +
                                 " --out-csv " + out_csv);
        REQUIRE(code == 0);

        // library-level reference run
        const SchemaFile schema = parse_schema_json(kToySchema);
        const Dataset d = load_csv(dir.file("toy.csv"), schema.schema, ColumnMap{}, 0.5);
        ModelSpec linear;
        linear.terms = {{"x", TermKind::Linear}};
        NuisanceSpecs specs;
        specs.lambda1 = specs.pi1_obs = specs.tau = linear;
        std::vector<EstimandRequest> requests;
        for (const auto family :
             {std::pair{Estimand::Mu, AssumptionSet::A1A2}, {Estimand::Mu, AssumptionSet::A1A3},
              {Estimand::Mu, AssumptionSet::A1A2A3}, {Estimand::Nu, AssumptionSet::A1},
              {Estimand::Nu, AssumptionSet::A1A2A3}}) {
            requests.push_back({family.first, 1, family.second});
            requests.push_back({family.first, 0, family.second});
        }
        const RunResult expected = run_crossfit(d, requests, 1, 7, specs, ClipPolicy{0.01});

        const nlohmann::json report = nlohmann::json::parse(read_file(out_json));
        REQUIRE(report["estimates"].size() == 10);
        for (std::size_t i = 0; i < 10; ++i) {
            CHECK(report["estimates"][i]["point"].get<double>() ==
                  round6(expected.reports[i].point));
            CHECK(report["estimates"][i]["se"].get<double>() == round6(expected.reports[i].se));
        }
        REQUIRE(report["contrasts"].size() == 5);

        // every CSV number equals the corresponding JSON field
        std::istringstream csv(read_file(out_csv));
        std::string line;
        std::getline(csv, line);  // header
        int estimate_rows = 0, delta_rows = 0;
        while (std::getline(csv, line)) {
            std::istringstream fields(line);
            std::string assumptions, parameter, estimate, se;
            std::getline(fields, assumptions, ',');
            std::getline(fields, parameter, ',');
            std::getline(fields, estimate, ',');
            std::getline(fields, se, ',');
            if (parameter.rfind("delta", 0) == 0) {
                ++delta_rows;
                for (const auto& c : report["contrasts"]) {
                    if (c["parameter"] == parameter &&
                        c["assumptions"].get<std::string>() == assumptions) {
                        CHECK(std::strtod(estimate.c_str(), nullptr) == c["delta"].get<double>());
                    }
                }
            } else {
                ++estimate_rows;
            }
        }
        CHECK(estimate_rows == 10);
        CHECK(delta_rows == 5);
    }

    TEST_CASE("analyze missing column exits 2") {
        TempDir dir;
        write_file(dir.file("bad.csv"), "x,R,T\n0.1,1,1\n");
        write_file(dir.file("schema.json"), kToySchema);
        const int code = run_cli("analyze --data " + dir.file("bad.csv") + " --schema " +
                                 dir.file("schema.json") + " --pi-t1 0.5");
        CHECK(code == 2);
    }

    TEST_CASE("analyze estimand selection and repeated runs are byte identical") {
        TempDir dir;
        write_file(dir.file("toy.csv"), kToyCsv);
        write_file(dir.file("schema.json"), kToySchema);
        write_file(dir.file("config.json"), kToyConfig);
        const std::string base = "analyze --data " + dir.file("toy.csv") + " --schema " +
                                 dir.file("schema.json") + " --config " + dir.file("config.json") +
                                 " --pi-t1 0.5 --splits 2 --seed 3 --estimand mu:a1a2a3";
        REQUIRE(run_cli(base + " --threads 1 --out-json " + dir.file("a.json") + " --out-csv " +
                        dir.file("a.csv")) == 0);
        REQUIRE(run_cli(base + " --threads 3 --out-json " + dir.file("b.json") + " --out-csv " +
                        dir.file("b.csv")) == 0);
        CHECK(read_file(dir.file("a.json")) == read_file(dir.file("b.json")));
        CHECK(read_file(dir.file("a.csv")) == read_file(dir.file("b.csv")));
        const nlohmann::json report = nlohmann::json::parse(read_file(dir.file("a.json")));
        CHECK(report["estimates"].size() == 2);
        CHECK(report["contrasts"].size() == 1);
    }

    TEST_CASE("CCS_SEED environment fallback") {
        TempDir dir;
        write_file(dir.file("toy.csv"), kToyCsv);
        write_file(dir.file("schema.json"), kToySchema);
        write_file(dir.file("config.json"), kToyConfig);
        const std::string base = "analyze --data " + dir.file("toy.csv") + " --schema " +
                                 dir.file("schema.json") + " --config " + dir.file("config.json") +
                                 " --pi-t1 0.5 --splits 2 --estimand mu:a1a2";
        REQUIRE(std::system(("CCS_SEED=11 " + std::string(CCS_CLI_PATH) + " " + base +
                             " --out-json " + dir.file("env.json") + " >/dev/null 2>&1")
                                .c_str()) == 0);
        REQUIRE(run_cli(base + " --seed 11 --out-json " + dir.file("flag.json")) == 0);
        CHECK(read_file(dir.file("env.json")) == read_file(dir.file("flag.json")));
        const nlohmann::json report = nlohmann::json::parse(read_file(dir.file("env.json")));
        CHECK(report["seed"].get<std::uint64_t>() == 11);
    }

    TEST_CASE("diagnose empty OBS stratum exits 2") {
        TempDir dir;
        std::string csv = "x,R,T,Y\n";
        for (int i = 0; i < 12; ++i) {
            csv += std::to_string(0.1 * i) + ",1," + std::to_string(i % 2) + "," +
                   std::to_string((i / 2) % 2) + "\n";
        }
        write_file(dir.file("rct_only.csv"), csv);
        write_file(dir.file("schema.json"), kToySchema);
        write_file(dir.file("config.json"), kToyConfig);
        const int code = run_cli("diagnose --data " + dir.file("rct_only.csv") + " --schema " +
                                 dir.file("schema.json") + " --config " + dir.file("config.json") +
                                 " --pi-t1 0.5");
        CHECK(code == 2);
    }

    TEST_CASE("diagnose writes a JSON report on well-formed data") {
        TempDir dir;
        // bigger balanced toy sample so the arm fits converge
        std::string csv = "x,R,T,Y\n";
        Rng rng(6);
        for (int i = 0; i < 200; ++i) {
            const double x = rng.normal();
            const int r = rng.bernoulli(0.5) ? 1 : 0;
            const int t = rng.bernoulli(0.5) ? 1 : 0;
            const int y = rng.bernoulli(0.2 + 0.1 * t) ? 1 : 0;
            csv += std::to_string(x) + "," + std::to_string(r) + "," + std::to_string(t) + "," +
                   std::to_string(y) + "\n";
        }
        write_file(dir.file("data.csv"), csv);
        write_file(dir.file("schema.json"), kToySchema);
        write_file(dir.file("config.json"), kToyConfig);
        const int code = run_cli("diagnose --data " + dir.file("data.csv") + " --schema " +
                                 dir.file("schema.json") + " --config " + dir.file("config.json") +
                                 " --pi-t1 0.5 --out-json " + dir.file("diag.json"));
        REQUIRE(code == 0);
        const nlohmann::json report = nlohmann::json::parse(read_file(dir.file("diag.json")));
        REQUIRE(report["arms"].size() == 2);
        CHECK(report["arms"][0]["or"].get<double>() > 0.0);
        CHECK(report["positivity"]["lambda1"]["min"].get<double>() >= 0.01);
    }

    TEST_CASE("simulate smoke run, determinism, and bad labels") {
        TempDir dir;
        write_file(dir.file("scenario.json"), R"({
            "study": 3, "misspec": "a", "n": 400, "reps": 10, "k": 2,
            "master_seed": 99, "n_truth": 20000, "threads": 2
        })");
        REQUIRE(run_cli("simulate " + dir.file("scenario.json") + " --out-csv " +
                        dir.file("m1.csv") + " --out-json " + dir.file("m1.json")) == 0);
        REQUIRE(run_cli("simulate " + dir.file("scenario.json") + " --threads 1 --out-csv " +
                        dir.file("m2.csv") + " --out-json " + dir.file("m2.json")) == 0);
        CHECK(read_file(dir.file("m1.csv")) == read_file(dir.file("m2.csv")));
        CHECK(read_file(dir.file("m1.json")) == read_file(dir.file("m2.json")));

        const nlohmann::json metrics = nlohmann::json::parse(read_file(dir.file("m1.json")));
        REQUIRE(metrics["rows"].size() == 10);
        for (const auto& row : metrics["rows"]) {
            CHECK(std::isfinite(row["bias"].get<double>()));
            CHECK(std::isfinite(row["sd"].get<double>()));
        }
        // CSV has a header plus ten rows
        std::istringstream csv(read_file(dir.file("m1.csv")));
        int lines = 0;
        std::string line;
        while (std::getline(csv, line)) ++lines;
        CHECK(lines == 11);

        write_file(dir.file("bad.json"), R"({"study": 3, "misspec": "z", "n": 100, "reps": 2})");
        CHECK(run_cli("simulate " + dir.file("bad.json")) == 2);
        CHECK(run_cli("simulate " + dir.file("missing.json")) == 2);
    }
}
