#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ccs {

// ---- covariate schema -------------------------------------------------------

enum class CovariateKind { Continuous, Categorical };

struct CovariateEntry {
    std::string name;
    CovariateKind kind = CovariateKind::Continuous;
    std::vector<std::string> levels;  // Categorical only, >= 2 entries
};

class CovariateSchema {
public:
    CovariateSchema() = default;
    explicit CovariateSchema(std::vector<CovariateEntry> entries);

    const std::vector<CovariateEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    const CovariateEntry& at(std::size_t i) const { return entries_[i]; }

    // Index of a named covariate; throws ConfigError when absent.
    std::size_t index_of(const std::string& name) const;
    bool operator==(const CovariateSchema& other) const;

private:
    std::vector<CovariateEntry> entries_;
};

// ---- observations and datasets ----------------------------------------------

enum class OutcomeKind { Binary, Continuous };

// One subject: covariates (categoricals stored as level indices), consent
// indicator r (1 = RCT, 0 = OBS), treatment t (1 = A, 0 = B), outcome y.
struct Observation {
    std::vector<double> x;
    int r = 0;
    int t = 0;
    double y = 0.0;
};

class Dataset {
public:
    Dataset() = default;
    Dataset(CovariateSchema schema, std::vector<Observation> rows, OutcomeKind outcome_kind,
            double pi_t1);

    const CovariateSchema& schema() const { return schema_; }
    OutcomeKind outcome_kind() const { return outcome_kind_; }
    double pi_t1() const { return pi_t1_; }

    std::size_t n() const { return rows_.size(); }
    const Observation& row(std::size_t i) const { return rows_[i]; }
    const std::vector<Observation>& rows() const { return rows_; }

    const std::vector<double>& x(std::size_t i) const { return rows_[i].x; }
    int r(std::size_t i) const { return rows_[i].r; }
    int t(std::size_t i) const { return rows_[i].t; }
    double y(std::size_t i) const { return rows_[i].y; }

private:
    CovariateSchema schema_;
    std::vector<Observation> rows_;
    OutcomeKind outcome_kind_ = OutcomeKind::Binary;
    double pi_t1_ = 0.5;
};

struct CellCounts {
    long count[2][2] = {{0, 0}, {0, 0}};  // indexed [r][t]
    long total() const { return count[0][0] + count[0][1] + count[1][0] + count[1][1]; }
};

CellCounts cell_counts(const Dataset& d);

// Throws EmptySubgroup naming the first empty (r,t) cell.
void require_all_cells(const Dataset& d);

// ---- fold plans --------------------------------------------------------------

enum class FoldMode { Balanced, Multinomial };

struct FoldPlan {
    int k = 1;
    std::vector<int> assignment;  // per-row fold label in 1..k
    std::uint64_t seed = 0;
    FoldMode mode = FoldMode::Balanced;

    std::vector<std::vector<int>> fold_members() const;
};

// Deterministic in (n, k, seed, mode). Balanced: random permutation chopped
// into k blocks whose sizes differ by at most one (earlier folds take the
// remainder). Multinomial: i.i.d. uniform labels, mirroring
// sample(1:K, n, replace=TRUE).
FoldPlan make_folds(std::size_t n, int k, std::uint64_t seed,
                    FoldMode mode = FoldMode::Balanced);

// ---- CSV / JSON input --------------------------------------------------------

struct ColumnMap {
    std::string r = "R";
    std::string t = "T";
    std::string y = "Y";
    // covariate name -> CSV column; unmapped covariates use their own name
    std::map<std::string, std::string> covariates;

    std::string column_for(const std::string& covariate) const;
};

Dataset load_csv(const std::string& path, const CovariateSchema& schema,
                 const ColumnMap& column_map, double pi_t1,
                 OutcomeKind outcome_kind = OutcomeKind::Binary);

void write_csv(const Dataset& d, const std::string& path,
               const ColumnMap& column_map = ColumnMap{});

// JSON schema descriptor: {"outcome": "binary"|"continuous",
//   "covariates": [{"name":..,"kind":"continuous"} |
//                  {"name":..,"kind":"categorical","levels":[..]}]}
struct SchemaFile {
    CovariateSchema schema;
    OutcomeKind outcome_kind = OutcomeKind::Binary;
};
SchemaFile load_schema_json(const std::string& path);
SchemaFile parse_schema_json(const std::string& text);

// ---- ordering helper ---------------------------------------------------------

// Indices of `rows` sorted by observation content (covariates, then r, t, y).
// Row-order reductions done in this order are invariant to permutations of the
// dataset, which keeps estimates bit-identical under row shuffling.
std::vector<int> canonical_order(const Dataset& d, std::span<const int> rows);

std::vector<int> all_rows(const Dataset& d);

}  // namespace ccs
