#include "ccs/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "ccs/errors.hpp"
#include "ccs/rng.hpp"

namespace ccs {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_number(const std::string& s, long row, const std::string& column) {
    const std::string t = trim(s);
    if (t.empty()) throw UnparseableNumber(row, column, s);
    double value = 0.0;
    const char* begin = t.data();
    const char* end = begin + t.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        throw UnparseableNumber(row, column, s);
    }
    return value;
}

int parse_binary(const std::string& s, long row, const std::string& field) {
    const std::string t = trim(s);
    if (t == "0") return 0;
    if (t == "1") return 1;
    throw NonBinary(field, row);
}

}  // namespace

// ---- schema ----

CovariateSchema::CovariateSchema(std::vector<CovariateEntry> entries)
    : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (e.name.empty()) throw ConfigError("covariate name must be non-empty");
        for (std::size_t j = 0; j < i; ++j) {
            if (entries_[j].name == e.name) {
                throw ConfigError("duplicate covariate name: " + e.name);
            }
        }
        if (e.kind == CovariateKind::Categorical && e.levels.size() < 2) {
            throw ConfigError("categorical covariate " + e.name + " needs >= 2 levels");
        }
        if (e.kind == CovariateKind::Continuous && !e.levels.empty()) {
            throw ConfigError("continuous covariate " + e.name + " must not declare levels");
        }
    }
}

std::size_t CovariateSchema::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name == name) return i;
    }
    throw ConfigError("unknown covariate: " + name);
}

bool CovariateSchema::operator==(const CovariateSchema& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& a = entries_[i];
        const auto& b = other.entries_[i];
        if (a.name != b.name || a.kind != b.kind || a.levels != b.levels) return false;
    }
    return true;
}

// ---- dataset ----

Dataset::Dataset(CovariateSchema schema, std::vector<Observation> rows, OutcomeKind outcome_kind,
                 double pi_t1)
    : schema_(std::move(schema)),
      rows_(std::move(rows)),
      outcome_kind_(outcome_kind),
      pi_t1_(pi_t1) {
    if (!(pi_t1_ > 0.0 && pi_t1_ < 1.0)) {
        throw ConfigError("pi_t1 must lie in (0,1), got " + std::to_string(pi_t1_));
    }
    const std::size_t p = schema_.size();
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        const Observation& o = rows_[i];
        if (o.x.size() != p) {
            throw ConfigError("row " + std::to_string(i + 1) + " has " +
                              std::to_string(o.x.size()) + " covariates, schema has " +
                              std::to_string(p));
        }
        if (o.r != 0 && o.r != 1) throw NonBinary("R", static_cast<long>(i + 1));
        if (o.t != 0 && o.t != 1) throw NonBinary("T", static_cast<long>(i + 1));
        if (!std::isfinite(o.y)) {
            throw ConfigError("non-finite outcome in row " + std::to_string(i + 1));
        }
        if (outcome_kind_ == OutcomeKind::Binary && o.y != 0.0 && o.y != 1.0) {
            throw NonBinary("Y", static_cast<long>(i + 1));
        }
        for (std::size_t j = 0; j < p; ++j) {
            if (!std::isfinite(o.x[j])) {
                throw ConfigError("non-finite covariate " + schema_.at(j).name + " in row " +
                                  std::to_string(i + 1));
            }
        }
    }
}

CellCounts cell_counts(const Dataset& d) {
    CellCounts c;
    for (std::size_t i = 0; i < d.n(); ++i) ++c.count[d.r(i)][d.t(i)];
    return c;
}

void require_all_cells(const Dataset& d) {
    const CellCounts c = cell_counts(d);
    for (int r = 0; r < 2; ++r) {
        for (int t = 0; t < 2; ++t) {
            if (c.count[r][t] == 0) throw EmptySubgroup(r, t);
        }
    }
}

// ---- folds ----

std::vector<std::vector<int>> FoldPlan::fold_members() const {
    std::vector<std::vector<int>> members(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        members[static_cast<std::size_t>(assignment[i] - 1)].push_back(static_cast<int>(i));
    }
    return members;
}

FoldPlan make_folds(std::size_t n, int k, std::uint64_t seed, FoldMode mode) {
    if (k < 1 || static_cast<std::size_t>(k) > n) {
        throw InvalidFoldCount(k, static_cast<long>(n));
    }
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.mode = mode;
    plan.assignment.assign(n, 1);
    Rng rng(mix_seed(seed, 0xf01d5u));
    if (mode == FoldMode::Balanced) {
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng.below(i));
            std::swap(perm[i - 1], perm[j]);
        }
        // earlier folds take the remainder rows, so sizes differ by at most one
        const std::size_t base = n / static_cast<std::size_t>(k);
        const std::size_t extra = n % static_cast<std::size_t>(k);
        std::size_t pos = 0;
        for (int fold = 1; fold <= k; ++fold) {
            const std::size_t size = base + (static_cast<std::size_t>(fold) <= extra ? 1 : 0);
            for (std::size_t j = 0; j < size; ++j) {
                plan.assignment[static_cast<std::size_t>(perm[pos++])] = fold;
            }
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            int label = 1 + static_cast<int>(rng.uniform() * k);
            if (label > k) label = k;
            plan.assignment[i] = label;
        }
    }
    return plan;
}

// ---- CSV ----

std::string ColumnMap::column_for(const std::string& covariate) const {
    auto it = covariates.find(covariate);
    return it == covariates.end() ? covariate : it->second;
}

Dataset load_csv(const std::string& path, const CovariateSchema& schema,
                 const ColumnMap& column_map, double pi_t1, OutcomeKind outcome_kind) {
    std::ifstream file(path);
    if (!file) throw ConfigError("cannot open file: " + path);

    std::string line;
    if (!std::getline(file, line)) throw ConfigError("empty file: " + path);
    const std::vector<std::string> header = split_csv_line(line);

    auto column_index = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw MissingColumn(name);
    };

    const std::size_t r_col = column_index(column_map.r);
    const std::size_t t_col = column_index(column_map.t);
    const std::size_t y_col = column_index(column_map.y);
    std::vector<std::size_t> x_cols(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
        x_cols[j] = column_index(column_map.column_for(schema.at(j).name));
    }

    std::vector<Observation> rows;
    long row_number = 0;
    while (std::getline(file, line)) {
        if (trim(line).empty()) continue;
        ++row_number;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() < header.size()) {
            throw ConfigError("row " + std::to_string(row_number) + " has " +
                              std::to_string(fields.size()) + " fields, header has " +
                              std::to_string(header.size()));
        }
        Observation o;
        o.r = parse_binary(fields[r_col], row_number, "R");
        o.t = parse_binary(fields[t_col], row_number, "T");
        if (outcome_kind == OutcomeKind::Binary) {
            o.y = parse_binary(fields[y_col], row_number, "Y");
        } else {
            o.y = parse_number(fields[y_col], row_number, column_map.y);
        }
        o.x.resize(schema.size());
        for (std::size_t j = 0; j < schema.size(); ++j) {
            const CovariateEntry& e = schema.at(j);
            const std::string& raw = fields[x_cols[j]];
            if (e.kind == CovariateKind::Continuous) {
                o.x[j] = parse_number(raw, row_number, column_map.column_for(e.name));
            } else {
                const std::string value = trim(raw);
                auto it = std::find(e.levels.begin(), e.levels.end(), value);
                if (it == e.levels.end()) {
                    throw UnknownLevel(row_number, column_map.column_for(e.name), value);
                }
                o.x[j] = static_cast<double>(it - e.levels.begin());
            }
        }
        rows.push_back(std::move(o));
    }
    return Dataset(schema, std::move(rows), outcome_kind, pi_t1);
}

void write_csv(const Dataset& d, const std::string& path, const ColumnMap& column_map) {
    std::ofstream file(path);
    if (!file) throw ConfigError("cannot open file for writing: " + path);
    const CovariateSchema& schema = d.schema();
    for (std::size_t j = 0; j < schema.size(); ++j) {
        file << column_map.column_for(schema.at(j).name) << ',';
    }
    file << column_map.r << ',' << column_map.t << ',' << column_map.y << '\n';
    char buf[64];
    for (std::size_t i = 0; i < d.n(); ++i) {
        for (std::size_t j = 0; j < schema.size(); ++j) {
            const CovariateEntry& e = schema.at(j);
            if (e.kind == CovariateKind::Categorical) {
                file << e.levels[static_cast<std::size_t>(d.x(i)[j])];
            } else {
                std::snprintf(buf, sizeof(buf), "%.17g", d.x(i)[j]);
                file << buf;
            }
            file << ',';
        }
        file << d.r(i) << ',' << d.t(i) << ',';
        if (d.outcome_kind() == OutcomeKind::Binary) {
            file << static_cast<int>(d.y(i));
        } else {
            std::snprintf(buf, sizeof(buf), "%.17g", d.y(i));
            file << buf;
        }
        file << '\n';
    }
}

// ---- schema JSON ----

SchemaFile parse_schema_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid schema JSON: ") + e.what());
    }
    SchemaFile out;
    if (j.contains("outcome")) {
        const std::string kind = j["outcome"].get<std::string>();
        if (kind == "binary") {
            out.outcome_kind = OutcomeKind::Binary;
        } else if (kind == "continuous") {
            out.outcome_kind = OutcomeKind::Continuous;
        } else {
            throw ConfigError("outcome must be 'binary' or 'continuous', got " + kind);
        }
    }
    if (!j.contains("covariates") || !j["covariates"].is_array()) {
        throw ConfigError("schema JSON needs a 'covariates' array");
    }
    std::vector<CovariateEntry> entries;
    for (const auto& c : j["covariates"]) {
        CovariateEntry e;
        e.name = c.at("name").get<std::string>();
        const std::string kind = c.at("kind").get<std::string>();
        if (kind == "continuous") {
            e.kind = CovariateKind::Continuous;
        } else if (kind == "categorical") {
            e.kind = CovariateKind::Categorical;
            if (!c.contains("levels")) {
                throw ConfigError("categorical covariate " + e.name + " needs 'levels'");
            }
            e.levels = c["levels"].get<std::vector<std::string>>();
        } else {
            throw ConfigError("covariate kind must be 'continuous' or 'categorical', got " +
                              kind);
        }
        entries.push_back(std::move(e));
    }
    out.schema = CovariateSchema(std::move(entries));
    return out;
}

SchemaFile load_schema_json(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw ConfigError("cannot open schema file: " + path);
    std::stringstream ss;
    ss << file.rdbuf();
    return parse_schema_json(ss.str());
}

// ---- ordering ----

std::vector<int> canonical_order(const Dataset& d, std::span<const int> rows) {
    std::vector<int> order(rows.begin(), rows.end());
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const Observation& oa = d.row(static_cast<std::size_t>(a));
        const Observation& ob = d.row(static_cast<std::size_t>(b));
        for (std::size_t j = 0; j < oa.x.size(); ++j) {
            if (oa.x[j] != ob.x[j]) return oa.x[j] < ob.x[j];
        }
        if (oa.r != ob.r) return oa.r < ob.r;
        if (oa.t != ob.t) return oa.t < ob.t;
        return oa.y < ob.y;
    });
    return order;
}

std::vector<int> all_rows(const Dataset& d) {
    std::vector<int> rows(d.n());
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

}  // namespace ccs
