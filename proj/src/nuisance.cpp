#include "ccs/nuisance.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "ccs/errors.hpp"
#include "ccs/special_functions.hpp"

namespace ccs {

namespace {

constexpr double kCoefTol = 1e-8;
constexpr int kMaxIterations = 100;
constexpr double kSeparationEta = 30.0;
constexpr double kWeightFloor = 1e-10;

// R type-7 quantile on sorted values.
double quantile_sorted(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = (static_cast<double>(n) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= n) return sorted[n - 1];
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

}  // namespace

// ---- model specs ----

ModelSpec default_model_spec(const CovariateSchema& schema, int smooth_df) {
    ModelSpec spec;
    for (const auto& e : schema.entries()) {
        ModelTerm term;
        term.covariate = e.name;
        if (e.kind == CovariateKind::Continuous) {
            term.kind = TermKind::Smooth;
            term.df = smooth_df;
        } else {
            term.kind = TermKind::Linear;
        }
        spec.terms.push_back(std::move(term));
    }
    return spec;
}

NuisanceSpecs NuisanceSpecs::defaults(const CovariateSchema& schema, int smooth_df) {
    NuisanceSpecs specs;
    specs.lambda1 = default_model_spec(schema, smooth_df);
    specs.pi1_obs = specs.lambda1;
    specs.tau = specs.lambda1;
    return specs;
}

// ---- spline basis ----

SplineKnots spline_knots(std::span<const double> values, int df, const std::string& name) {
    if (df < 2) throw ConfigError("smooth term on " + name + " needs df >= 2");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    long distinct = sorted.empty() ? 0 : 1;
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i] != sorted[i - 1]) ++distinct;
    }
    if (distinct < df) throw DegenerateCovariate(name, df, distinct);
    SplineKnots knots;
    knots.lo = sorted.front();
    knots.hi = sorted.back();
    knots.interior.resize(static_cast<std::size_t>(df - 1));
    for (int j = 1; j < df; ++j) {
        knots.interior[static_cast<std::size_t>(j - 1)] =
            quantile_sorted(sorted, static_cast<double>(j) / static_cast<double>(df));
    }
    return knots;
}

void spline_basis_row(const SplineKnots& knots, double x, std::span<double> out) {
    // Natural cubic basis: x plus df-1 columns d_j(x) - d_{K-1}(x), where
    // d_k(x) = [(x - xi_k)_+^3 - (x - xi_K)_+^3] / (xi_K - xi_k) and the knot
    // sequence is lo, interior..., hi. Linear beyond the boundary knots.
    const std::size_t m = knots.interior.size();  // df - 1
    std::vector<double> xi(m + 2);
    xi[0] = knots.lo;
    for (std::size_t j = 0; j < m; ++j) xi[j + 1] = knots.interior[j];
    xi[m + 1] = knots.hi;

    auto cube_plus = [](double v) { return v > 0.0 ? v * v * v : 0.0; };
    const double last = xi[m + 1];
    auto d = [&](std::size_t k) {
        const double denom = last - xi[k];
        if (denom == 0.0) return 0.0;
        return (cube_plus(x - xi[k]) - cube_plus(x - last)) / denom;
    };

    out[0] = x;
    const double d_last = d(m);  // k = K-1 (0-based index m)
    for (std::size_t j = 0; j < m; ++j) {
        out[j + 1] = d(j) - d_last;
    }
}

std::vector<std::vector<double>> spline_basis(std::span<const double> values, int df,
                                              const std::string& name) {
    const SplineKnots knots = spline_knots(values, df, name);
    std::vector<std::vector<double>> basis(values.size(),
                                           std::vector<double>(static_cast<std::size_t>(df)));
    for (std::size_t i = 0; i < values.size(); ++i) {
        spline_basis_row(knots, values[i], basis[i]);
    }
    return basis;
}

// ---- design layout ----

namespace {

DesignLayout build_layout(const Dataset& d, std::span<const int> rows, const ModelSpec& spec,
                          std::size_t n_extra) {
    const CovariateSchema& schema = d.schema();
    DesignLayout layout;
    layout.intercept = spec.include_intercept;
    int col = layout.intercept ? 1 : 0;
    for (const ModelTerm& term : spec.terms) {
        DesignLayout::Block block;
        block.cov_index = schema.index_of(term.covariate);
        block.kind = term.kind;
        block.first_col = col;
        const CovariateEntry& entry = schema.at(block.cov_index);
        if (term.kind == TermKind::Smooth) {
            if (entry.kind != CovariateKind::Continuous) {
                throw ConfigError("smooth term on categorical covariate " + term.covariate);
            }
            std::vector<double> values(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                values[i] = d.x(static_cast<std::size_t>(rows[i]))[block.cov_index];
            }
            block.knots = spline_knots(values, term.df, term.covariate);
            block.n_cols = term.df;
        } else if (entry.kind == CovariateKind::Categorical) {
            block.n_cols = static_cast<int>(entry.levels.size()) - 1;
        } else {
            block.n_cols = 1;
        }
        col += block.n_cols;
        layout.blocks.push_back(std::move(block));
    }
    layout.n_extra = static_cast<int>(n_extra);
    layout.n_cols = col + layout.n_extra;
    return layout;
}

}  // namespace

void DesignLayout::fill_row(const std::vector<double>& x, std::span<double> out) const {
    int col = 0;
    if (intercept) out[col++] = 1.0;
    for (const Block& block : blocks) {
        const double value = x[block.cov_index];
        if (block.kind == TermKind::Smooth) {
            spline_basis_row(block.knots, value,
                             out.subspan(static_cast<std::size_t>(block.first_col),
                                         static_cast<std::size_t>(block.n_cols)));
        } else if (block.n_cols == 1) {
            out[static_cast<std::size_t>(block.first_col)] = value;
        } else {
            const int level = static_cast<int>(value);
            for (int j = 0; j < block.n_cols; ++j) {
                out[static_cast<std::size_t>(block.first_col + j)] =
                    (level == j + 1) ? 1.0 : 0.0;
            }
        }
        col = block.first_col + block.n_cols;
    }
}

double AdditiveFit::linear_predictor(const std::vector<double>& x) const {
    if (layout.n_extra != 0) {
        throw EstimationError("cannot predict from a fit with extra columns");
    }
    std::vector<double> row(static_cast<std::size_t>(layout.n_cols), 0.0);
    layout.fill_row(x, row);
    double lp = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) lp += row[j] * coefficients[j];
    return lp;
}

double AdditiveFit::predict(const std::vector<double>& x, const ClipPolicy& clip) const {
    const double lp = linear_predictor(x);
    if (link == LinkKind::Identity) return lp;
    return clip.clamp(expit(lp));
}

double target_value(const Observation& o, TargetVar target) {
    switch (target) {
        case TargetVar::Consent: return static_cast<double>(o.r);
        case TargetVar::Treatment: return static_cast<double>(o.t);
        case TargetVar::Outcome: return o.y;
    }
    return 0.0;
}

// ---- fitting ----

namespace {

struct Design {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    DesignLayout layout;
};

Design build_design(const Dataset& d, std::span<const int> rows, TargetVar target,
                    const ModelSpec& spec, const std::vector<ExtraColumn>& extra) {
    if (rows.empty()) throw EstimationError("cannot fit a model on zero rows");
    const std::vector<int> order = canonical_order(d, rows);
    Design design;
    design.layout = build_layout(d, order, spec, extra.size());
    const std::size_t n = order.size();
    const std::size_t p = static_cast<std::size_t>(design.layout.n_cols);
    design.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    design.y.resize(static_cast<Eigen::Index>(n));
    std::vector<double> row(p, 0.0);
    const int extra_first = design.layout.n_cols - design.layout.n_extra;
    for (std::size_t i = 0; i < n; ++i) {
        const Observation& o = d.row(static_cast<std::size_t>(order[i]));
        design.layout.fill_row(o.x, row);
        for (std::size_t e = 0; e < extra.size(); ++e) {
            row[static_cast<std::size_t>(extra_first) + e] = extra[e].value(o);
        }
        for (std::size_t j = 0; j < p; ++j) {
            design.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
        }
        design.y(static_cast<Eigen::Index>(i)) = target_value(o, target);
    }
    return design;
}

Eigen::VectorXd penalty_diagonal(const DesignLayout& layout, double ridge) {
    Eigen::VectorXd diag = Eigen::VectorXd::Constant(layout.n_cols, ridge);
    if (layout.intercept) diag(0) = 0.0;
    return diag;
}

double penalized_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& beta, const Eigen::VectorXd& penalty) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        ll += y(i) * eta(i) - softplus(eta(i));
    }
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        ll -= 0.5 * penalty(j) * beta(j) * beta(j);
    }
    return ll;
}

std::vector<double> observed_information_se(const Eigen::MatrixXd& x, const Eigen::VectorXd& w) {
    const Eigen::MatrixXd info = x.transpose() * w.asDiagonal() * x;
    const Eigen::Index p = info.rows();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    std::vector<double> se(static_cast<std::size_t>(p),
                           std::numeric_limits<double>::quiet_NaN());
    if (ldlt.info() != Eigen::Success) return se;
    const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
    for (Eigen::Index j = 0; j < p; ++j) {
        const double v = inv(j, j);
        se[static_cast<std::size_t>(j)] = v > 0.0 ? std::sqrt(v) : std::numeric_limits<double>::quiet_NaN();
    }
    return se;
}

}  // namespace

AdditiveFit fit_logistic_additive(const Dataset& d, std::span<const int> rows, TargetVar target,
                                  const ModelSpec& spec, double ridge,
                                  const std::vector<ExtraColumn>& extra) {
    if (ridge < 0.0) throw ConfigError("ridge must be >= 0");
    Design design = build_design(d, rows, target, spec, extra);
    const Eigen::Index n = design.x.rows();
    const Eigen::Index p = design.x.cols();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double yi = design.y(i);
        if (yi != 0.0 && yi != 1.0) {
            throw EstimationError("logistic fit requires a binary target");
        }
    }
    if (p >= n && ridge == 0.0) {
        throw SingularDesign("width " + std::to_string(p) + " >= rows " + std::to_string(n) +
                             " with ridge 0");
    }

    const Eigen::VectorXd penalty = penalty_diagonal(design.layout, ridge);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);

    AdditiveFit fit;
    fit.spec = spec;
    fit.layout = design.layout;
    fit.link = LinkKind::Logit;

    double ll = penalized_loglik(eta, design.y, beta, penalty);
    fit.loglik_trace.push_back(ll);

    for (int iter = 1; iter <= kMaxIterations; ++iter) {
        Eigen::VectorXd prob(n), w(n), z(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double pi = expit(eta(i));
            prob(i) = pi;
            const double wi = std::max(pi * (1.0 - pi), kWeightFloor);
            w(i) = wi;
            z(i) = eta(i) + (design.y(i) - pi) / wi;
        }
        Eigen::MatrixXd a = design.x.transpose() * w.asDiagonal() * design.x;
        a.diagonal() += penalty;
        const Eigen::VectorXd b = design.x.transpose() * (w.asDiagonal() * z);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
        if (ldlt.info() != Eigen::Success) {
            throw SingularDesign("penalized normal equations failed to factorize");
        }
        Eigen::VectorXd beta_new = ldlt.solve(b);
        if (!beta_new.allFinite()) {
            throw SingularDesign("penalized normal equations produced non-finite solution");
        }

        // step-halve toward the previous iterate until the penalized
        // log-likelihood is non-decreasing
        Eigen::VectorXd eta_new = design.x * beta_new;
        double ll_new = penalized_loglik(eta_new, design.y, beta_new, penalty);
        int halvings = 0;
        while (ll_new < ll - 1e-10 * (1.0 + std::fabs(ll)) && halvings < 60) {
            beta_new = 0.5 * (beta + beta_new);
            eta_new = design.x * beta_new;
            ll_new = penalized_loglik(eta_new, design.y, beta_new, penalty);
            ++halvings;
        }

        const double delta = (beta_new - beta).cwiseAbs().maxCoeff();
        beta = beta_new;
        eta = eta_new;
        ll = ll_new;
        fit.iterations = iter;
        fit.loglik_trace.push_back(ll);

        if (delta < kCoefTol) {
            fit.converged = true;
            break;
        }
        if (eta.cwiseAbs().maxCoeff() > kSeparationEta) {
            fit.separation = true;
            break;
        }
    }

    fit.coefficients.assign(beta.data(), beta.data() + p);
    Eigen::VectorXd w_final(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double pi = expit(eta(i));
        w_final(i) = std::max(pi * (1.0 - pi), kWeightFloor);
    }
    fit.coef_se = observed_information_se(design.x, w_final);
    return fit;
}

AdditiveFit fit_linear_additive(const Dataset& d, std::span<const int> rows, TargetVar target,
                                const ModelSpec& spec, double ridge,
                                const std::vector<ExtraColumn>& extra) {
    if (ridge < 0.0) throw ConfigError("ridge must be >= 0");
    Design design = build_design(d, rows, target, spec, extra);
    const Eigen::Index n = design.x.rows();
    const Eigen::Index p = design.x.cols();
    if (p >= n && ridge == 0.0) {
        throw SingularDesign("width " + std::to_string(p) + " >= rows " + std::to_string(n) +
                             " with ridge 0");
    }
    const Eigen::VectorXd penalty = penalty_diagonal(design.layout, ridge);
    Eigen::MatrixXd a = design.x.transpose() * design.x;
    a.diagonal() += penalty;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success) {
        throw SingularDesign("penalized normal equations failed to factorize");
    }
    const Eigen::VectorXd beta = ldlt.solve(design.x.transpose() * design.y);
    if (!beta.allFinite()) {
        throw SingularDesign("penalized normal equations produced non-finite solution");
    }

    AdditiveFit fit;
    fit.spec = spec;
    fit.layout = design.layout;
    fit.link = LinkKind::Identity;
    fit.converged = true;
    fit.iterations = 1;
    fit.coefficients.assign(beta.data(), beta.data() + p);

    const Eigen::VectorXd resid = design.y - design.x * beta;
    const double dof = static_cast<double>(n) - static_cast<double>(p);
    const double sigma2 = dof > 0.0 ? resid.squaredNorm() / dof : 0.0;
    fit.coef_se = observed_information_se(design.x, Eigen::VectorXd::Ones(n));
    for (double& se : fit.coef_se) se *= std::sqrt(sigma2);
    return fit;
}

// ---- learner ----

namespace {

class AdditiveFitModel : public ProbModel {
public:
    AdditiveFitModel(AdditiveFit fit, ClipPolicy clip) : fit_(std::move(fit)), clip_(clip) {}
    double predict(const std::vector<double>& x) const override { return fit_.predict(x, clip_); }
    bool converged() const override { return fit_.converged; }
    bool separation() const override { return fit_.separation; }

private:
    AdditiveFit fit_;
    ClipPolicy clip_;
};

}  // namespace

ProbModelPtr AdditiveLogisticLearner::fit(const Dataset& d, std::span<const int> rows,
                                          TargetVar target, const ModelSpec& spec, double ridge,
                                          const ClipPolicy& clip) const {
    if (target == TargetVar::Outcome && d.outcome_kind() == OutcomeKind::Continuous) {
        return std::make_shared<AdditiveFitModel>(
            fit_linear_additive(d, rows, target, spec, ridge), clip);
    }
    return std::make_shared<AdditiveFitModel>(fit_logistic_additive(d, rows, target, spec, ridge),
                                              clip);
}

const Learner& builtin_learner() {
    static const AdditiveLogisticLearner learner;
    return learner;
}

// ---- bundle ----

NuisanceNeeds NuisanceNeeds::all() {
    NuisanceNeeds needs;
    needs.lambda1 = true;
    needs.pi1_obs = true;
    for (int t = 0; t < 2; ++t) {
        needs.tau_pooled[t] = true;
        for (int r = 0; r < 2; ++r) needs.tau_rt[t][r] = true;
    }
    return needs;
}

void NuisanceNeeds::merge(const NuisanceNeeds& other) {
    lambda1 |= other.lambda1;
    pi1_obs |= other.pi1_obs;
    for (int t = 0; t < 2; ++t) {
        tau_pooled[t] |= other.tau_pooled[t];
        for (int r = 0; r < 2; ++r) tau_rt[t][r] |= other.tau_rt[t][r];
    }
}

namespace {

const ProbModel& require_model(const ProbModelPtr& model, const char* name) {
    if (!model) throw EstimationError(std::string("nuisance model not fitted: ") + name);
    return *model;
}

}  // namespace

double NuisanceBundle::lambda1_at(const std::vector<double>& x) const {
    return clip.clamp(require_model(lambda1_x, "lambda1").predict(x));
}

double NuisanceBundle::pi1_obs_at(const std::vector<double>& x) const {
    return clip.clamp(require_model(pi1_obs_x, "pi1_obs").predict(x));
}

double NuisanceBundle::pi_obs_at(int t, const std::vector<double>& x) const {
    const double p1 = pi1_obs_at(x);
    return t == 1 ? p1 : 1.0 - p1;
}

double NuisanceBundle::tau_at(int t, int r, const std::vector<double>& x) const {
    return require_model(tau_t_r_x[t][r], "tau(t,r)").predict(x);
}

double NuisanceBundle::tau_pooled_at(int t, const std::vector<double>& x) const {
    return require_model(tau_t_x[t], "tau(t)").predict(x);
}

double NuisanceBundle::pi_rx(int t, int r, const std::vector<double>& x) const {
    return r == 1 ? pi_t1_arm(t) : pi_obs_at(t, x);
}

bool NuisanceBundle::all_converged() const {
    auto ok = [](const ProbModelPtr& m) { return !m || m->converged(); };
    bool all = ok(lambda1_x) && ok(pi1_obs_x);
    for (int t = 0; t < 2; ++t) {
        all = all && ok(tau_t_x[t]);
        for (int r = 0; r < 2; ++r) all = all && ok(tau_t_r_x[t][r]);
    }
    return all;
}

double compose_pi_t_x(const NuisanceBundle& b, int t, const std::vector<double>& x,
                      const ClipPolicy& clip) {
    const double lambda = b.lambda1_at(x);
    const double pi_obs = b.pi_obs_at(t, x);
    return clip.clamp(lambda * b.pi_t1_arm(t) + (1.0 - lambda) * pi_obs);
}

NuisanceBundle fit_bundle(const Dataset& d, std::span<const int> train_rows,
                          const NuisanceSpecs& specs, const ClipPolicy& clip,
                          const NuisanceNeeds& needs, const Learner& learner) {
    if (train_rows.empty()) throw EstimationError("empty training set");

    NuisanceBundle bundle;
    bundle.pi_t1 = d.pi_t1();
    bundle.clip = clip;

    long n_rct = 0;
    std::vector<int> obs_rows;
    std::vector<int> cell_rows[2][2];  // [r][t]
    std::vector<int> arm_rows[2];      // [t]
    for (int row : train_rows) {
        const Observation& o = d.row(static_cast<std::size_t>(row));
        n_rct += o.r;
        if (o.r == 0) obs_rows.push_back(row);
        cell_rows[o.r][o.t].push_back(row);
        arm_rows[o.t].push_back(row);
    }
    bundle.lambda1_scalar = static_cast<double>(n_rct) / static_cast<double>(train_rows.size());

    if (needs.lambda1) {
        if (n_rct == 0) throw EmptySubgroup(1, -1);
        if (n_rct == static_cast<long>(train_rows.size())) throw EmptySubgroup(0, -1);
        bundle.lambda1_x =
            learner.fit(d, train_rows, TargetVar::Consent, specs.lambda1, specs.ridge, clip);
    }
    if (needs.pi1_obs) {
        if (obs_rows.empty()) throw EmptySubgroup(0, -1);
        bundle.pi1_obs_x =
            learner.fit(d, obs_rows, TargetVar::Treatment, specs.pi1_obs, specs.ridge, clip);
    }
    for (int t = 0; t < 2; ++t) {
        for (int r = 0; r < 2; ++r) {
            if (!needs.tau_rt[t][r]) continue;
            if (cell_rows[r][t].empty()) throw EmptySubgroup(r, t);
            bundle.tau_t_r_x[t][r] =
                learner.fit(d, cell_rows[r][t], TargetVar::Outcome, specs.tau, specs.ridge, clip);
        }
        if (needs.tau_pooled[t]) {
            if (arm_rows[t].empty()) throw EmptySubgroup(-1, t);
            bundle.tau_t_x[t] =
                learner.fit(d, arm_rows[t], TargetVar::Outcome, specs.tau, specs.ridge, clip);
        }
    }
    return bundle;
}

}  // namespace ccs
