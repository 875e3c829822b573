#pragma once

#include <stdexcept>
#include <string>

namespace ccs {

// Base class for all library errors. Subclasses carry the context needed to
// report actionable messages (row numbers, column names, subgroup cells).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Configuration / input validation errors (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Runtime estimation errors (CLI exit code 3).
class EstimationError : public Error {
public:
    using Error::Error;
};

// ---- dataset ----

class MissingColumn : public ConfigError {
public:
    explicit MissingColumn(const std::string& column)
        : ConfigError("missing column: " + column), column_(column) {}
    const std::string& column() const { return column_; }

private:
    std::string column_;
};

class UnknownLevel : public ConfigError {
public:
    UnknownLevel(long row, const std::string& column, const std::string& value)
        : ConfigError("unknown level '" + value + "' in column " + column +
                      ", row " + std::to_string(row)),
          row_(row), column_(column), value_(value) {}
    long row() const { return row_; }
    const std::string& column() const { return column_; }

private:
    long row_;
    std::string column_;
    std::string value_;
};

class NonBinary : public ConfigError {
public:
    NonBinary(const std::string& field, long row)
        : ConfigError("non-binary value in field " + field + ", row " + std::to_string(row)),
          field_(field), row_(row) {}
    const std::string& field() const { return field_; }
    long row() const { return row_; }

private:
    std::string field_;
    long row_;
};

class UnparseableNumber : public ConfigError {
public:
    UnparseableNumber(long row, const std::string& column, const std::string& value)
        : ConfigError("cannot parse '" + value + "' as a number in column " + column +
                      ", row " + std::to_string(row)),
          row_(row), column_(column) {}
    long row() const { return row_; }
    const std::string& column() const { return column_; }

private:
    long row_;
    std::string column_;
};

class InvalidFoldCount : public ConfigError {
public:
    InvalidFoldCount(long k, long n)
        : ConfigError("invalid fold count k=" + std::to_string(k) +
                      " for n=" + std::to_string(n)),
          k_(k), n_(n) {}
    long k() const { return k_; }
    long n() const { return n_; }

private:
    long k_;
    long n_;
};

// ---- nuisance ----

class DegenerateCovariate : public EstimationError {
public:
    DegenerateCovariate(const std::string& name, int df, long distinct)
        : EstimationError("covariate " + name + " has " + std::to_string(distinct) +
                          " distinct values, fewer than df=" + std::to_string(df)),
          name_(name) {}
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

class SingularDesign : public EstimationError {
public:
    explicit SingularDesign(const std::string& what)
        : EstimationError("singular penalized design: " + what) {}
};

class EmptySubgroup : public EstimationError {
public:
    EmptySubgroup(int r, int t)
        : EstimationError("empty (R=" + std::to_string(r) + ", T=" + std::to_string(t) +
                          ") subgroup in training data"),
          r_(r), t_(t) {}
    // r or t may be -1 when the subgroup is marginal (e.g. all OBS rows).
    int r() const { return r_; }
    int t() const { return t_; }

private:
    int r_;
    int t_;
};

// ---- estimators ----

class EmptyFold : public EstimationError {
public:
    explicit EmptyFold(int fold)
        : EstimationError("fold " + std::to_string(fold) + " has zero rows"), fold_(fold) {}
    int fold() const { return fold_; }

private:
    int fold_;
};

class MismatchedRuns : public EstimationError {
public:
    explicit MismatchedRuns(const std::string& what)
        : EstimationError("contrast inputs come from different runs: " + what) {}
};

class InvalidRequest : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// ---- simlab ----

class DomainError : public EstimationError {
public:
    using EstimationError::EstimationError;
};

class NotPositiveDefinite : public EstimationError {
public:
    explicit NotPositiveDefinite(const std::string& what)
        : EstimationError("covariance matrix not positive definite: " + what) {}
};

class NoRoot : public EstimationError {
public:
    explicit NoRoot(const std::string& what)
        : EstimationError("no root in achievable range: " + what) {}
};

}  // namespace ccs
