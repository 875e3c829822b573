#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ccs/dataset.hpp"

namespace ccs {

// ---- model specification -----------------------------------------------------

enum class TermKind { Linear, Smooth };

struct ModelTerm {
    std::string covariate;
    TermKind kind = TermKind::Linear;
    int df = 4;  // Smooth only
};

struct ModelSpec {
    std::vector<ModelTerm> terms;
    bool include_intercept = true;
};

// Every continuous covariate gets a smooth term (default df 4, mirroring the
// s() terms of a generalized additive fit), categoricals enter as factors.
ModelSpec default_model_spec(const CovariateSchema& schema, int smooth_df = 4);

struct ClipPolicy {
    double epsilon = 0.01;

    double clamp(double p) const {
        if (p < epsilon) return epsilon;
        if (p > 1.0 - epsilon) return 1.0 - epsilon;
        return p;
    }
    bool clips(double p) const { return p < epsilon || p > 1.0 - epsilon; }
};

// ---- spline basis --------------------------------------------------------------

// Natural cubic spline basis definition: boundary knots at the extremes of the
// training values, interior knots at quantiles. Linear outside the boundary.
struct SplineKnots {
    double lo = 0.0;
    double hi = 1.0;
    std::vector<double> interior;
};

// Knot placement for a df-column basis (df-1 interior quantile knots).
// Throws DegenerateCovariate when there are fewer than df distinct values.
SplineKnots spline_knots(std::span<const double> values, int df, const std::string& name);

// Evaluate the df basis columns at x into out[0..df-1].
void spline_basis_row(const SplineKnots& knots, double x, std::span<double> out);

// df-column basis matrix (row-major, values.size() x df) with knots from the
// values themselves.
std::vector<std::vector<double>> spline_basis(std::span<const double> values, int df,
                                              const std::string& name = "x");

// ---- fitted additive models ----------------------------------------------------

enum class LinkKind { Logit, Identity };

// Column layout binding a ModelSpec to a schema, with per-smooth knots chosen
// from training data. Reference-level dummy coding, first declared level as
// reference.
struct DesignLayout {
    struct Block {
        std::size_t cov_index = 0;
        TermKind kind = TermKind::Linear;
        int first_col = 0;
        int n_cols = 0;
        SplineKnots knots;  // Smooth only
    };
    bool intercept = true;
    std::vector<Block> blocks;
    int n_extra = 0;  // appended raw columns (after blocks)
    int n_cols = 0;

    void fill_row(const std::vector<double>& x, std::span<double> out) const;
};

struct AdditiveFit {
    ModelSpec spec;
    DesignLayout layout;
    LinkKind link = LinkKind::Logit;
    std::vector<double> coefficients;  // layout order; extra columns last
    std::vector<double> coef_se;       // unpenalized observed-information SEs
    bool converged = false;
    bool separation = false;
    int iterations = 0;
    std::vector<double> loglik_trace;  // penalized log-likelihood per iteration

    double linear_predictor(const std::vector<double>& x) const;
    // Logit: expit(lp) clamped into [eps, 1-eps]. Identity: lp unclipped.
    double predict(const std::vector<double>& x, const ClipPolicy& clip) const;
};

enum class TargetVar { Consent, Treatment, Outcome };

struct ExtraColumn {
    std::string name;
    std::function<double(const Observation&)> value;
};

// Ridge-penalized IRLS logistic fit (intercept unpenalized). Converged when
// the max coefficient change drops below 1e-8 within 100 iterations; flags
// separation when some |linear predictor| exceeds 30 before convergence.
AdditiveFit fit_logistic_additive(const Dataset& d, std::span<const int> rows, TargetVar target,
                                  const ModelSpec& spec, double ridge,
                                  const std::vector<ExtraColumn>& extra = {});

// Ridge least-squares fit with identity link, for continuous outcomes.
AdditiveFit fit_linear_additive(const Dataset& d, std::span<const int> rows, TargetVar target,
                                const ModelSpec& spec, double ridge,
                                const std::vector<ExtraColumn>& extra = {});

double target_value(const Observation& o, TargetVar target);

// ---- learner interface ----------------------------------------------------------

// Fitted probability (or conditional-mean) function of the covariate vector.
class ProbModel {
public:
    virtual ~ProbModel() = default;
    virtual double predict(const std::vector<double>& x) const = 0;
    virtual bool converged() const { return true; }
    virtual bool separation() const { return false; }
};

using ProbModelPtr = std::shared_ptr<const ProbModel>;

// Wraps an arbitrary function; used for injected nuisances and for the
// misspecification transforms that distort fitted predictors pointwise.
class FunctionModel : public ProbModel {
public:
    explicit FunctionModel(std::function<double(const std::vector<double>&)> fn)
        : fn_(std::move(fn)) {}
    double predict(const std::vector<double>& x) const override { return fn_(x); }

private:
    std::function<double(const std::vector<double>&)> fn_;
};

class ConstantModel : public ProbModel {
public:
    explicit ConstantModel(double value) : value_(value) {}
    double predict(const std::vector<double>&) const override { return value_; }

private:
    double value_;
};

// Abstract nuisance learner: fit on rows, return a probability function.
// Estimators only see ProbModel, so any learner with the required rates can
// stand in for the built-in additive-logistic one.
class Learner {
public:
    virtual ~Learner() = default;
    virtual ProbModelPtr fit(const Dataset& d, std::span<const int> rows, TargetVar target,
                             const ModelSpec& spec, double ridge,
                             const ClipPolicy& clip) const = 0;
};

class AdditiveLogisticLearner : public Learner {
public:
    ProbModelPtr fit(const Dataset& d, std::span<const int> rows, TargetVar target,
                     const ModelSpec& spec, double ridge, const ClipPolicy& clip) const override;
};

const Learner& builtin_learner();

// ---- nuisance bundle -------------------------------------------------------------

struct NuisanceSpecs {
    ModelSpec lambda1;  // consent model, target R
    ModelSpec pi1_obs;  // treatment-in-OBS model, target T on R=0 rows
    ModelSpec tau;      // all outcome models
    double ridge = 1e-6;

    static NuisanceSpecs defaults(const CovariateSchema& schema, int smooth_df = 4);
};

struct NuisanceNeeds {
    bool lambda1 = false;
    bool pi1_obs = false;
    bool tau_rt[2][2] = {{false, false}, {false, false}};  // [t][r]
    bool tau_pooled[2] = {false, false};                   // [t]

    static NuisanceNeeds all();
    void merge(const NuisanceNeeds& other);
};

struct NuisanceBundle {
    ProbModelPtr lambda1_x;           // P(R=1 | X)
    ProbModelPtr pi1_obs_x;           // P(T=1 | R=0, X)
    ProbModelPtr tau_t_r_x[2][2];     // [t][r]: E[Y | T=t, R=r, X]
    ProbModelPtr tau_t_x[2];          // [t]:   E[Y | T=t, X]
    double lambda1_scalar = 0.0;      // training-fold mean of R
    double pi_t1 = 0.5;               // known randomization probability
    ClipPolicy clip;

    double pi_t1_arm(int t) const { return t == 1 ? pi_t1 : 1.0 - pi_t1; }

    double lambda1_at(const std::vector<double>& x) const;
    double pi1_obs_at(const std::vector<double>& x) const;   // arm 1
    double pi_obs_at(int t, const std::vector<double>& x) const;
    double tau_at(int t, int r, const std::vector<double>& x) const;
    double tau_pooled_at(int t, const std::vector<double>& x) const;

    // pi_t(r, x) = r * pi_t1 + (1 - r) * pi_t(0, x)
    double pi_rx(int t, int r, const std::vector<double>& x) const;

    bool all_converged() const;
};

// Composed marginal propensity lambda1(x) * pi_t1 + (1 - lambda1(x)) * pi_t(0,x),
// clipped.
double compose_pi_t_x(const NuisanceBundle& b, int t, const std::vector<double>& x,
                      const ClipPolicy& clip);

// Fits the requested nuisance models on the training rows. Throws
// EmptySubgroup when a required subgroup has no rows.
NuisanceBundle fit_bundle(const Dataset& d, std::span<const int> train_rows,
                          const NuisanceSpecs& specs, const ClipPolicy& clip,
                          const NuisanceNeeds& needs, const Learner& learner = builtin_learner());

}  // namespace ccs
