#include "ccs/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>

#include "ccs/errors.hpp"
#include "ccs/parallel.hpp"

namespace ccs {

namespace {

// ---- additive-logistic truth functions ----

struct ContinuousEffect {
    std::size_t cov;
    double center;
    double scale;
    double lin;
    double curve;  // coefficient on tanh(rate * z)
    double rate;
};

struct CategoricalEffect {
    std::size_t cov;
    std::vector<double> level_effects;  // one per level, reference 0
};

struct AdditiveTruth {
    double intercept = 0.0;
    std::vector<ContinuousEffect> continuous;
    std::vector<CategoricalEffect> categorical;

    double logit_at(const std::vector<double>& x) const {
        double lp = intercept;
        for (const ContinuousEffect& e : continuous) {
            const double z = (x[e.cov] - e.center) / e.scale;
            lp += e.lin * z + e.curve * std::tanh(e.rate * z);
        }
        for (const CategoricalEffect& e : categorical) {
            lp += e.level_effects[static_cast<std::size_t>(x[e.cov])];
        }
        return lp;
    }
    double operator()(const std::vector<double>& x) const { return expit(logit_at(x)); }
};

// Schema indices of the synthetic stand-in covariates.
enum Cov : std::size_t {
    kAge = 0,
    kSbp,
    kDbp,
    kSex,
    kEduc,
    kAngType,
    kVessels3,
    kPlad,
    kPriorMi,
    kDiab,
    kSmoking,
    kHyper
};

class CardiacCohortGenerator final : public CovariateGenerator {
public:
    CardiacCohortGenerator()
        : schema_({
              {"age", CovariateKind::Continuous, {}},
              {"sbp", CovariateKind::Continuous, {}},
              {"dbp", CovariateKind::Continuous, {}},
              {"sex", CovariateKind::Categorical, {"female", "male"}},
              {"educ", CovariateKind::Categorical, {"lt_hs", "hs", "some_college", "college"}},
              {"angtype", CovariateKind::Categorical, {"other", "unstable"}},
              {"vessels3", CovariateKind::Categorical, {"no", "yes"}},
              {"plad", CovariateKind::Categorical, {"no", "yes"}},
              {"prior_mi", CovariateKind::Categorical, {"no", "yes"}},
              {"diab", CovariateKind::Categorical, {"none", "treated", "untreated"}},
              {"smoking", CovariateKind::Categorical, {"no", "yes"}},
              {"hyper", CovariateKind::Categorical, {"no", "yes"}},
          }) {}

    const CovariateSchema& schema() const override { return schema_; }

    std::vector<double> draw(Rng& rng) const override {
        std::vector<double> x(12);
        x[kAge] = 61.0 + 9.0 * rng.normal();
        x[kSbp] = 130.0 + 18.0 * rng.normal();
        x[kDbp] = 76.0 + 10.0 * rng.normal();
        x[kSex] = categorical(rng, {0.26, 0.74});
        x[kEduc] = categorical(rng, {0.20, 0.49, 0.19, 0.12});
        x[kAngType] = categorical(rng, {0.32, 0.68});
        x[kVessels3] = categorical(rng, {0.62, 0.38});
        x[kPlad] = categorical(rng, {0.615, 0.385});
        x[kPriorMi] = categorical(rng, {0.48, 0.52});
        x[kDiab] = categorical(rng, {0.775, 0.18, 0.045});
        x[kSmoking] = categorical(rng, {0.77, 0.23});
        x[kHyper] = categorical(rng, {0.517, 0.483});
        return x;
    }

private:
    static double categorical(Rng& rng, std::initializer_list<double> probs) {
        const double u = rng.uniform();
        double cum = 0.0;
        int level = 0;
        for (double p : probs) {
            cum += p;
            if (u < cum) return static_cast<double>(level);
            ++level;
        }
        return static_cast<double>(level - 1);
    }

    CovariateSchema schema_;
};

AdditiveTruth make_lambda_truth() {
    AdditiveTruth t;
    t.intercept = -0.06;
    t.continuous = {
        {kAge, 61.0, 9.0, 0.15, 0.35, 1.2},
        {kSbp, 130.0, 18.0, -0.12, 0.0, 1.0},
    };
    t.categorical = {
        {kSex, {0.0, -0.10}},
        {kEduc, {0.0, 0.05, -0.15, -0.75}},
        {kVessels3, {0.0, 0.12}},
        {kPlad, {0.0, 0.18}},
        {kPriorMi, {0.0, 0.17}},
        {kDiab, {0.0, 0.12, 0.05}},
        {kSmoking, {0.0, 0.25}},
    };
    return t;
}

AdditiveTruth make_pi_obs_truth() {
    AdditiveTruth t;
    t.intercept = 1.45;
    t.continuous = {
        {kAge, 61.0, 9.0, -0.10, -0.30, 1.2},
        {kSbp, 130.0, 18.0, -0.08, 0.0, 1.0},
        {kDbp, 76.0, 10.0, 0.05, 0.0, 1.0},
    };
    t.categorical = {
        {kEduc, {0.0, 0.10, 0.15, 0.08}},
        {kAngType, {0.0, -0.12}},
        {kVessels3, {0.0, -1.05}},
        {kPlad, {0.0, -0.75}},
        {kDiab, {0.0, -0.22, -0.20}},
        {kSmoking, {0.0, 0.35}},
        {kHyper, {0.0, -0.22}},
    };
    return t;
}

AdditiveTruth make_outcome_truth(int arm) {
    AdditiveTruth t;
    t.intercept = arm == 1 ? -2.62 : -2.83;
    t.continuous = {
        {kAge, 61.0, 9.0, 0.35, 0.25, 1.2},
        {kSbp, 130.0, 18.0, 0.12, 0.0, 1.0},
        {kDbp, 76.0, 10.0, -0.10, 0.0, 1.0},
    };
    t.categorical = {
        {kVessels3, {0.0, arm == 1 ? 0.50 : 0.34}},
        {kPlad, {0.0, 0.22}},
        {kPriorMi, {0.0, 0.28}},
        {kDiab, {0.0, 0.65, 0.45}},
    };
    return t;
}

}  // namespace

const CovariateGenerator& builtin_generator() {
    static const CardiacCohortGenerator generator;
    return generator;
}

NuisanceSpecs default_sim_specs(const CovariateSchema& schema) {
    auto spec_for = [&](const std::vector<std::string>& names) {
        ModelSpec spec;
        for (const std::string& name : names) {
            schema.index_of(name);  // validates
            ModelTerm term;
            term.covariate = name;
            term.kind = (name == "age") ? TermKind::Smooth : TermKind::Linear;
            spec.terms.push_back(std::move(term));
        }
        return spec;
    };
    // parsimonious correct specifications: each model carries exactly the
    // terms its truth function loads on
    NuisanceSpecs specs;
    specs.lambda1 = spec_for(
        {"age", "sbp", "sex", "educ", "vessels3", "plad", "prior_mi", "diab", "smoking"});
    specs.pi1_obs = spec_for(
        {"age", "sbp", "dbp", "educ", "angtype", "vessels3", "plad", "diab", "smoking", "hyper"});
    specs.tau = spec_for({"age", "sbp", "dbp", "vessels3", "plad", "prior_mi", "diab"});
    return specs;
}

SimTruths make_sim_truths(int study) {
    if (study < 1 || study > 3) {
        throw ConfigError("study must be 1, 2 or 3, got " + std::to_string(study));
    }
    SimTruths truths;
    truths.lambda1 = make_lambda_truth();
    truths.pi1_obs = make_pi_obs_truth();
    truths.tau[1] = make_outcome_truth(1);
    truths.tau[0] = make_outcome_truth(0);
    truths.pi_t1 = 0.5;
    return truths;
}

// ---- latent-score machinery ----

Cov2 latent_sigma() {
    // latent scores W_R - U and W_Y - U with independent standard normal
    // components: variances 2, covariance 1
    return Cov2{2.0, 1.0, 1.0, 2.0};
}

double delta_r_of_lambda(double lambda) { return normal_quantile(lambda, 0.0, 2.0); }

namespace {

// Brent root finder on a bracketing interval.
double brent(const std::function<double(double)>& f, double lo, double hi, double f_lo,
             double f_hi) {
    constexpr int kMaxIter = 200;
    constexpr double kXTol = 1e-14;
    constexpr double kFTol = 1e-12;
    double a = lo, b = hi, fa = f_lo, fb = f_hi;
    double c = a, fc = fa, d = b - a, e = d;
    for (int iter = 0; iter < kMaxIter; ++iter) {
        if (std::fabs(fc) < std::fabs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        const double tol = 2.0 * kXTol * std::max(1.0, std::fabs(b));
        const double m = 0.5 * (c - b);
        if (std::fabs(fb) < kFTol || std::fabs(m) <= tol) return b;
        if (std::fabs(e) < tol || std::fabs(fa) <= std::fabs(fb)) {
            d = m;
            e = m;
        } else {
            double s = fb / fa;
            double p, q;
            if (a == c) {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc;
                const double r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::fabs(p);
            if (2.0 * p < std::min(3.0 * m * q - std::fabs(tol * q), std::fabs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        }
        a = b;
        fa = fb;
        b += std::fabs(d) > tol ? d : (m > 0.0 ? tol : -tol);
        fb = f(b);
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            e = b - a;
            d = e;
        }
    }
    return b;
}

}  // namespace

double solve_delta_y(double target, double delta_r, const Cov2& sigma, bool literal) {
    const double lambda = normal_cdf(delta_r, 0.0, sigma.s22);
    const double bound = literal ? lambda : 1.0 - lambda;
    if (!(target > 0.0 && target < bound)) {
        throw NoRoot("target " + std::to_string(target) + " outside (0, " +
                     std::to_string(bound) + ")");
    }
    auto f = [&](double delta) {
        const double joint = bvn_cdf(delta, delta_r, sigma);
        if (literal) return joint - target;
        return normal_cdf(delta, 0.0, sigma.s11) - joint - target;
    };
    const double span = 30.0 * std::sqrt(sigma.s11);
    const double f_lo = f(-span);
    const double f_hi = f(span);
    if (!(f_lo < 0.0 && f_hi > 0.0)) {
        throw NoRoot("degenerate bracket for target " + std::to_string(target));
    }
    return brent(f, -span, span, f_lo, f_hi);
}

TrueNuisanceSet induced_truths(int study, const SimTruths& truths, bool literal_delta) {
    TrueNuisanceSet set;
    set.lambda1 = truths.lambda1;
    set.pi1_obs = truths.pi1_obs;
    set.pi_t1 = truths.pi_t1;
    if (study == 2 || study == 3) {
        // R and T carry no information about Y_t beyond X, so every
        // conditional outcome law equals the primitive
        for (int t = 0; t < 2; ++t) {
            set.tau_rt[t][0] = truths.tau[t];
            set.tau_rt[t][1] = truths.tau[t];
            set.tau_pooled[t] = truths.tau[t];
        }
        return set;
    }
    const Cov2 sigma = latent_sigma();
    for (int t = 0; t < 2; ++t) {
        const TruthFn lambda = truths.lambda1;
        const TruthFn tau0 = truths.tau[t];
        auto delta_y = [lambda, tau0, sigma, literal_delta](const std::vector<double>& x) {
            const double lam = lambda(x);
            return solve_delta_y(tau0(x) * (1.0 - lam), delta_r_of_lambda(lam), sigma,
                                 literal_delta);
        };
        set.tau_rt[t][1] = [delta_y, lambda, sigma](const std::vector<double>& x) {
            const double lam = lambda(x);
            return bvn_cdf(delta_y(x), delta_r_of_lambda(lam), sigma) / lam;
        };
        set.tau_rt[t][0] = [delta_y, lambda, sigma](const std::vector<double>& x) {
            const double lam = lambda(x);
            const double joint = bvn_cdf(delta_y(x), delta_r_of_lambda(lam), sigma);
            return (normal_cdf(delta_y(x), 0.0, sigma.s11) - joint) / (1.0 - lam);
        };
        set.tau_pooled[t] = [delta_y, sigma](const std::vector<double>& x) {
            return normal_cdf(delta_y(x), 0.0, sigma.s11);
        };
    }
    return set;
}

// ---- data generation ----

namespace {

Dataset finish_draw(const CovariateGenerator& gen, std::vector<Observation> rows, double pi_t1) {
    return Dataset(gen.schema(), std::move(rows), OutcomeKind::Binary, pi_t1);
}

}  // namespace

SimDraw gen_study1(std::size_t n, const SimTruths& truths, const CovariateGenerator& gen,
                   std::uint64_t seed, bool literal_delta) {
    const Cov2 sigma = latent_sigma();
    Rng rng(seed);
    SimDraw draw;
    draw.y1.resize(n);
    draw.y0.resize(n);
    draw.u.resize(n);
    std::vector<Observation> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        Observation& o = rows[i];
        o.x = gen.draw(rng);
        const double u = rng.normal();
        draw.u[i] = u;
        const double lambda = truths.lambda1(o.x);
        const double delta_r = delta_r_of_lambda(lambda);
        o.r = rng.bernoulli(normal_cdf(delta_r + u, 0.0, 1.0)) ? 1 : 0;
        o.t = rng.bernoulli(o.r == 1 ? truths.pi_t1 : truths.pi1_obs(o.x)) ? 1 : 0;
        for (int t = 0; t < 2; ++t) {
            const double target = truths.tau[t](o.x) * (1.0 - lambda);
            const double delta_y = solve_delta_y(target, delta_r, sigma, literal_delta);
            const std::int8_t yt = rng.bernoulli(normal_cdf(delta_y + u, 0.0, 1.0)) ? 1 : 0;
            (t == 1 ? draw.y1[i] : draw.y0[i]) = yt;
        }
        o.y = static_cast<double>(o.t == 1 ? draw.y1[i] : draw.y0[i]);
    }
    draw.data = finish_draw(gen, std::move(rows), truths.pi_t1);
    return draw;
}

SimDraw gen_study2(std::size_t n, const SimTruths& truths, const CovariateGenerator& gen,
                   std::uint64_t seed) {
    Rng rng(seed);
    SimDraw draw;
    draw.y1.resize(n);
    draw.y0.resize(n);
    draw.u.resize(n);
    std::vector<Observation> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        Observation& o = rows[i];
        o.x = gen.draw(rng);
        const double u = rng.normal();
        draw.u[i] = u;
        o.r = rng.bernoulli(truths.lambda1(o.x)) ? 1 : 0;
        // U enters OBS treatment choice: (A2) fails while (A3) holds
        const double p_t = o.r == 1 ? truths.pi_t1 : expit(logit(truths.pi1_obs(o.x)) - 2.0 * u);
        o.t = rng.bernoulli(p_t) ? 1 : 0;
        for (int t = 0; t < 2; ++t) {
            const double delta_y = normal_quantile(truths.tau[t](o.x), 0.0, 2.0);
            const std::int8_t yt = rng.bernoulli(normal_cdf(delta_y + u, 0.0, 1.0)) ? 1 : 0;
            (t == 1 ? draw.y1[i] : draw.y0[i]) = yt;
        }
        o.y = static_cast<double>(o.t == 1 ? draw.y1[i] : draw.y0[i]);
    }
    draw.data = finish_draw(gen, std::move(rows), truths.pi_t1);
    return draw;
}

SimDraw gen_study3(std::size_t n, const SimTruths& truths, const CovariateGenerator& gen,
                   std::uint64_t seed) {
    Rng rng(seed);
    SimDraw draw;
    draw.y1.resize(n);
    draw.y0.resize(n);
    draw.u.resize(n);
    std::vector<Observation> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        Observation& o = rows[i];
        o.x = gen.draw(rng);
        const double u = rng.normal();
        draw.u[i] = u;
        o.r = rng.bernoulli(truths.lambda1(o.x)) ? 1 : 0;
        o.t = rng.bernoulli(o.r == 1 ? truths.pi_t1 : truths.pi1_obs(o.x)) ? 1 : 0;
        for (int t = 0; t < 2; ++t) {
            const double delta_y = normal_quantile(truths.tau[t](o.x), 0.0, 2.0);
            const std::int8_t yt = rng.bernoulli(normal_cdf(delta_y + u, 0.0, 1.0)) ? 1 : 0;
            (t == 1 ? draw.y1[i] : draw.y0[i]) = yt;
        }
        o.y = static_cast<double>(o.t == 1 ? draw.y1[i] : draw.y0[i]);
    }
    draw.data = finish_draw(gen, std::move(rows), truths.pi_t1);
    return draw;
}

SimDraw gen_study(int study, std::size_t n, const SimTruths& truths,
                  const CovariateGenerator& gen, std::uint64_t seed, bool literal_delta) {
    switch (study) {
        case 1: return gen_study1(n, truths, gen, seed, literal_delta);
        case 2: return gen_study2(n, truths, gen, seed);
        case 3: return gen_study3(n, truths, gen, seed);
        default: throw ConfigError("study must be 1, 2 or 3, got " + std::to_string(study));
    }
}

// ---- misspecification transforms ----

double distort_shrink(double p, double mean, double variance) {
    return normal_cdf(logit(p), mean, variance);
}

double distort_mixture(double p) {
    const double lp = logit(p);
    return 0.7 * normal_cdf(lp, 0.0, 25.0) + 0.3 * normal_cdf(lp, 0.8, 0.04);
}

DistortionSet distortions_for(int study, char misspec) {
    DistortionSet set;
    auto invalid = [&]() {
        throw ConfigError(std::string("misspecification label '") + misspec +
                          "' is not defined for study " + std::to_string(study));
    };
    if (study == 1) {
        switch (misspec) {
            case 'a': break;
            case 'b': set.pi1_obs = true; break;
            case 'c': set.tau_r0 = true; break;
            case 'd': set.pi1_obs = set.tau_r0 = true; break;
            default: invalid();
        }
    } else if (study == 2) {
        switch (misspec) {
            case 'a': break;
            case 'b': set.lambda1 = true; break;
            case 'c': set.tau_r1 = true; break;
            case 'd': set.lambda1 = set.tau_r1 = true; break;
            default: invalid();
        }
    } else if (study == 3) {
        switch (misspec) {
            case 'a': break;
            case 'b': set.lambda1 = true; break;
            case 'c': set.pi1_obs = true; break;
            case 'd': set.tau_r1 = set.tau_r0 = set.tau_pooled = true; break;
            case 'e': set.lambda1 = set.pi1_obs = true; break;
            case 'f': set.lambda1 = set.tau_r1 = set.tau_r0 = set.tau_pooled = true; break;
            case 'g': set.pi1_obs = set.tau_r1 = set.tau_r0 = set.tau_pooled = true; break;
            case 'h':
                set.lambda1 = set.pi1_obs = true;
                set.tau_r1 = set.tau_r0 = set.tau_pooled = true;
                break;
            default: invalid();
        }
    } else {
        throw ConfigError("study must be 1, 2 or 3, got " + std::to_string(study));
    }
    return set;
}

namespace {

class DistortedModel : public ProbModel {
public:
    DistortedModel(ProbModelPtr base, std::function<double(double)> map)
        : base_(std::move(base)), map_(std::move(map)) {}
    double predict(const std::vector<double>& x) const override {
        return map_(base_->predict(x));
    }
    bool converged() const override { return base_->converged(); }
    bool separation() const override { return base_->separation(); }

private:
    ProbModelPtr base_;
    std::function<double(double)> map_;
};

ProbModelPtr distort(const ProbModelPtr& model, double (*map)(double)) {
    if (!model) return model;
    return std::make_shared<DistortedModel>(model, map);
}

double shrink_default(double p) { return distort_shrink(p); }

}  // namespace

NuisanceBundle apply_distortions(const NuisanceBundle& bundle, const DistortionSet& set) {
    NuisanceBundle out = bundle;
    if (set.lambda1) out.lambda1_x = distort(bundle.lambda1_x, &distort_mixture);
    if (set.pi1_obs) out.pi1_obs_x = distort(bundle.pi1_obs_x, &shrink_default);
    for (int t = 0; t < 2; ++t) {
        if (set.tau_r1) out.tau_t_r_x[t][1] = distort(bundle.tau_t_r_x[t][1], &shrink_default);
        if (set.tau_r0) out.tau_t_r_x[t][0] = distort(bundle.tau_t_r_x[t][0], &shrink_default);
        if (set.tau_pooled) out.tau_t_x[t] = distort(bundle.tau_t_x[t], &shrink_default);
    }
    return out;
}

// ---- scenario validation ----

void validate_scenario(const ScenarioConfig& cfg) {
    distortions_for(cfg.study, cfg.misspec);  // validates study and label
    if (cfg.n < 1) throw ConfigError("scenario n must be >= 1");
    if (cfg.reps < 1) throw ConfigError("scenario reps must be >= 1");
    if (cfg.k < 1 || static_cast<std::size_t>(cfg.k) > cfg.n) {
        throw ConfigError("scenario k must satisfy 1 <= k <= n");
    }
    if (!(cfg.clip.epsilon > 0.0 && cfg.clip.epsilon < 0.5)) {
        throw ConfigError("epsilon must lie in (0, 0.5)");
    }
    if (cfg.n_truth < 1000) throw ConfigError("n_truth must be >= 1000");
}

// ---- truth values ----

TruthValues compute_truth_values(int study, const SimTruths& truths,
                                 const CovariateGenerator& gen, std::size_t n_truth,
                                 std::uint64_t seed, bool literal_delta, int threads) {
    const Cov2 sigma = latent_sigma();
    constexpr std::size_t kChunk = 8192;
    const std::size_t n_chunks = (n_truth + kChunk - 1) / kChunk;

    struct Sums {
        double mu[2] = {0.0, 0.0};
        double nu_num[2] = {0.0, 0.0};
        double lambda = 0.0;
    };
    std::vector<Sums> chunk_sums(n_chunks);

    parallel_for(n_chunks, threads, [&](std::size_t c) {
        Rng rng(mix_seed(seed, c + 1));
        Sums sums;
        const std::size_t count = std::min(kChunk, n_truth - c * kChunk);
        for (std::size_t i = 0; i < count; ++i) {
            const std::vector<double> x = gen.draw(rng);
            const double lambda = truths.lambda1(x);
            sums.lambda += lambda;
            if (study == 1) {
                const double delta_r = delta_r_of_lambda(lambda);
                for (int t = 0; t < 2; ++t) {
                    const double target = truths.tau[t](x) * (1.0 - lambda);
                    const double delta_y = solve_delta_y(target, delta_r, sigma, literal_delta);
                    sums.mu[t] += normal_cdf(delta_y, 0.0, sigma.s11);
                    sums.nu_num[t] += bvn_cdf(delta_y, delta_r, sigma);
                }
            } else {
                for (int t = 0; t < 2; ++t) {
                    const double tau = truths.tau[t](x);
                    sums.mu[t] += tau;
                    sums.nu_num[t] += lambda * tau;
                }
            }
        }
        chunk_sums[c] = sums;
    });

    Sums total;
    for (const Sums& s : chunk_sums) {
        total.lambda += s.lambda;
        for (int t = 0; t < 2; ++t) {
            total.mu[t] += s.mu[t];
            total.nu_num[t] += s.nu_num[t];
        }
    }
    TruthValues truth;
    const double n = static_cast<double>(n_truth);
    for (int t = 0; t < 2; ++t) {
        truth.mu[t] = total.mu[t] / n;
        truth.nu[t] = total.nu_num[t] / total.lambda;
    }
    return truth;
}

// ---- metrics ----

MetricsRow summarize_metrics(std::span<const double> points, std::span<const double> ses,
                             double truth) {
    MetricsRow row;
    row.truth = truth;
    const std::size_t m = points.size();
    row.reps = static_cast<int>(m);
    if (m == 0) {
        row.sd_defined = false;
        return row;
    }
    double mean_point = 0.0, mean_se = 0.0;
    long covered = 0;
    for (std::size_t i = 0; i < m; ++i) {
        mean_point += points[i];
        mean_se += ses[i];
        if (truth >= points[i] - 1.96 * ses[i] && truth <= points[i] + 1.96 * ses[i]) {
            ++covered;
        }
    }
    mean_point /= static_cast<double>(m);
    mean_se /= static_cast<double>(m);
    row.bias = mean_point - truth;
    row.mean_se = mean_se;
    row.coverage95 = static_cast<double>(covered) / static_cast<double>(m);
    if (m >= 2) {
        double ss = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double dev = points[i] - mean_point;
            ss += dev * dev;
        }
        const double sample_var = ss / static_cast<double>(m - 1);
        row.sd = std::sqrt(sample_var);
        const double pop_var = sample_var * static_cast<double>(m - 1) / static_cast<double>(m);
        row.rmse = std::sqrt(row.bias * row.bias + pop_var);
        row.sd_defined = true;
    } else {
        row.sd = 0.0;
        row.sd_defined = false;
        row.rmse = std::fabs(row.bias);
    }
    return row;
}

// ---- Monte Carlo driver ----

namespace {

struct CellSpec {
    const char* parameter;
    int arm;
    Estimand estimand;
    AssumptionSet assumptions;
};

constexpr std::size_t kNumCells = 10;

const CellSpec kCells[kNumCells] = {
    {"mu1", 1, Estimand::Mu, AssumptionSet::A1A2},
    {"mu1", 1, Estimand::Mu, AssumptionSet::A1A3},
    {"mu1", 1, Estimand::Mu, AssumptionSet::A1A2A3},
    {"mu0", 0, Estimand::Mu, AssumptionSet::A1A2},
    {"mu0", 0, Estimand::Mu, AssumptionSet::A1A3},
    {"mu0", 0, Estimand::Mu, AssumptionSet::A1A2A3},
    {"nu1", 1, Estimand::Nu, AssumptionSet::A1},
    {"nu1", 1, Estimand::Nu, AssumptionSet::A1A2A3},
    {"nu0", 0, Estimand::Nu, AssumptionSet::A1},
    {"nu0", 0, Estimand::Nu, AssumptionSet::A1A2A3},
};

}  // namespace

MonteCarloResult run_monte_carlo(const ScenarioConfig& cfg) {
    return run_monte_carlo(cfg, make_sim_truths(cfg.study), builtin_generator());
}

MonteCarloResult run_monte_carlo(const ScenarioConfig& cfg, const SimTruths& truths,
                                 const CovariateGenerator& gen) {
    validate_scenario(cfg);
    const NuisanceSpecs specs = cfg.specs_set ? cfg.specs : default_sim_specs(gen.schema());
    const DistortionSet dist = distortions_for(cfg.study, cfg.misspec);

    MonteCarloResult result;
    result.truth = compute_truth_values(cfg.study, truths, gen, cfg.n_truth,
                                        mix_seed(cfg.master_seed, 0x7257e5u), cfg.literal_delta,
                                        cfg.threads);

    const std::size_t reps = static_cast<std::size_t>(cfg.reps);
    struct RepResult {
        double point[kNumCells];
        double se[kNumCells];
        bool failed = false;
    };
    std::vector<RepResult> rep_results(reps);

    std::vector<EstimandRequest> requests(kNumCells);
    NuisanceNeeds needs;
    for (std::size_t c = 0; c < kNumCells; ++c) {
        requests[c] = {kCells[c].estimand, kCells[c].arm, kCells[c].assumptions};
        needs.merge(needs_for(requests[c]));
    }

    std::atomic<int> completed{0};
    parallel_for(reps, cfg.threads, [&](std::size_t rep) {
        RepResult& out = rep_results[rep];
        try {
            const std::uint64_t rep_seed = mix_seed(cfg.master_seed, 1000003 + rep);
            const SimDraw draw = gen_study(cfg.study, cfg.n, truths, gen, mix_seed(rep_seed, 1),
                                           cfg.literal_delta);
            const FoldPlan plan = make_folds(cfg.n, cfg.k, mix_seed(rep_seed, 2));
            CrossfitBundles cfb = fit_crossfit_bundles(draw.data, plan, specs, cfg.clip, needs,
                                                       builtin_learner(), 1);
            if (dist.any()) {
                for (NuisanceBundle& bundle : cfb.bundles) {
                    bundle = apply_distortions(bundle, dist);
                }
            }
            for (std::size_t c = 0; c < kNumCells; ++c) {
                const EstimateReport report = estimate(draw.data, cfb, requests[c]);
                out.point[c] = report.point;
                out.se[c] = report.se;
            }
        } catch (const Error&) {
            out.failed = true;
        }
        if (cfg.progress) cfg.progress(completed.fetch_add(1) + 1, cfg.reps);
    });

    int failures = 0;
    for (const RepResult& r : rep_results) failures += r.failed ? 1 : 0;
    if (static_cast<long>(failures) * 100 > cfg.reps) {
        throw EstimationError("replicate failure rate " + std::to_string(failures) + "/" +
                              std::to_string(cfg.reps) + " exceeds 1%");
    }

    MetricsTable& table = result.table;
    table.study = cfg.study;
    table.misspec = cfg.misspec;
    table.n = cfg.n;
    table.reps_requested = cfg.reps;
    table.reps_used = cfg.reps - failures;
    table.failures = failures;
    table.master_seed = cfg.master_seed;

    for (std::size_t c = 0; c < kNumCells; ++c) {
        std::vector<double> points, ses;
        points.reserve(reps);
        ses.reserve(reps);
        for (const RepResult& r : rep_results) {
            if (r.failed) continue;
            points.push_back(r.point[c]);
            ses.push_back(r.se[c]);
        }
        const double truth = kCells[c].estimand == Estimand::Mu ? result.truth.mu[kCells[c].arm]
                                                                : result.truth.nu[kCells[c].arm];
        MetricsRow row = summarize_metrics(points, ses, truth);
        row.parameter = kCells[c].parameter;
        row.estimator = estimator_label(kCells[c].estimand, kCells[c].assumptions);
        table.rows.push_back(std::move(row));
    }
    return result;
}

}  // namespace ccs
