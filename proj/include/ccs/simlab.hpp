#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ccs/dataset.hpp"
#include "ccs/estimators.hpp"
#include "ccs/nuisance.hpp"
#include "ccs/rng.hpp"
#include "ccs/special_functions.hpp"

namespace ccs {

// ---- truth functions -----------------------------------------------------------

using TruthFn = std::function<double(const std::vector<double>&)>;

// Complete set of true nuisance functions implied by one study design.
struct TrueNuisanceSet {
    TruthFn lambda1;
    TruthFn pi1_obs;
    TruthFn tau_rt[2][2];   // [t][r]
    TruthFn tau_pooled[2];  // [t]
    double pi_t1 = 0.5;
};

// Study primitives: the outcome truth tau[t] is tau_t(0,x) for study 1,
// tau_t(1,x) for study 2 and tau_t(x) for study 3.
struct SimTruths {
    TruthFn lambda1;
    TruthFn pi1_obs;
    TruthFn tau[2];
    double pi_t1 = 0.5;
};

SimTruths make_sim_truths(int study);

// Expands study primitives into the full consistent set (study 1 derives the
// RCT-conditional and marginal outcome laws from the shared-latent
// construction).
TrueNuisanceSet induced_truths(int study, const SimTruths& truths, bool literal_delta = false);

// ---- covariate generator ---------------------------------------------------------

class CovariateGenerator {
public:
    virtual ~CovariateGenerator() = default;
    virtual const CovariateSchema& schema() const = 0;
    virtual std::vector<double> draw(Rng& rng) const = 0;
};

// Synthetic revascularization-style cohort: 12 covariates (3 continuous
// scaled normals, 9 categoricals with realistic frequencies), independent
// components.
const CovariateGenerator& builtin_generator();

// Default learner specs for simulation runs: a smooth age term plus linear
// terms elsewhere. The synthetic truths live inside this span, and the leaner
// design keeps the small per-(r,t) outcome fits well conditioned at n = 2000.
NuisanceSpecs default_sim_specs(const CovariateSchema& schema);

// ---- latent-score machinery --------------------------------------------------------

// Threshold such that a N(0,2) latent score falls below it with probability
// lambda.
double delta_r_of_lambda(double lambda);

// Covariance of the two latent scores (each = N(0,1) draw + shared U).
Cov2 latent_sigma();

// Solves for the outcome threshold delta. Default equation:
//   Phi(delta; 0, s11) - Phi2(delta, delta_r; 0, sigma) = target
// i.e. P(Y_t = 1, R = 0) = target, which fixes the OBS-conditional outcome
// law. The literal variant instead solves Phi2(delta, delta_r; 0, sigma) =
// target. Throws NoRoot when the target is outside the achievable range.
double solve_delta_y(double target, double delta_r, const Cov2& sigma, bool literal = false);

// ---- data generation -----------------------------------------------------------------

// Generated sample plus the latent quantities tests need: both potential
// outcomes and the shared confounder draws.
struct SimDraw {
    Dataset data;
    std::vector<std::int8_t> y1;
    std::vector<std::int8_t> y0;
    std::vector<double> u;
};

SimDraw gen_study1(std::size_t n, const SimTruths& truths, const CovariateGenerator& gen,
                   std::uint64_t seed, bool literal_delta = false);
SimDraw gen_study2(std::size_t n, const SimTruths& truths, const CovariateGenerator& gen,
                   std::uint64_t seed);
SimDraw gen_study3(std::size_t n, const SimTruths& truths, const CovariateGenerator& gen,
                   std::uint64_t seed);
SimDraw gen_study(int study, std::size_t n, const SimTruths& truths,
                  const CovariateGenerator& gen, std::uint64_t seed, bool literal_delta = false);

// ---- misspecification transforms --------------------------------------------------------

// Phi(logit(p); mean, variance): pulls predictions toward 1/2 for the default
// (0, 25).
double distort_shrink(double p, double mean = 0.0, double variance = 25.0);

// 0.7 * Phi(logit(p); 0, 25) + 0.3 * Phi(logit(p); 0.8, 0.04)
double distort_mixture(double p);

struct DistortionSet {
    bool lambda1 = false;
    bool pi1_obs = false;
    bool tau_r1 = false;
    bool tau_r0 = false;
    bool tau_pooled = false;

    bool any() const { return lambda1 || pi1_obs || tau_r1 || tau_r0 || tau_pooled; }
};

// Scenario panels: studies 1 and 2 define (a)-(d), study 3 defines (a)-(h).
// Throws ConfigError for labels outside the study's panel set.
DistortionSet distortions_for(int study, char misspec);

// Wraps the designated fitted predictors with the pointwise transforms;
// untouched models are shared with the input bundle.
NuisanceBundle apply_distortions(const NuisanceBundle& bundle, const DistortionSet& set);

// ---- scenario configuration ---------------------------------------------------------------

struct ScenarioConfig {
    int study = 3;
    char misspec = 'a';
    std::size_t n = 2000;
    int reps = 500;
    int k = 5;
    std::uint64_t master_seed = 1;
    NuisanceSpecs specs;
    bool specs_set = false;  // false: derive defaults from the generator schema
    ClipPolicy clip;
    int threads = 0;  // 0 = hardware concurrency
    bool literal_delta = false;
    std::size_t n_truth = 1000000;
    // optional, called after each completed replicate with (done, total)
    std::function<void(int, int)> progress;
};

void validate_scenario(const ScenarioConfig& cfg);

// ---- metrics ---------------------------------------------------------------------------------

struct MetricsRow {
    std::string parameter;  // mu1, mu0, nu1, nu0
    std::string estimator;  // mu:a1a2, ...
    double truth = 0.0;
    double bias = 0.0;
    double mean_se = 0.0;
    double sd = 0.0;
    double coverage95 = 0.0;
    double rmse = 0.0;
    int reps = 0;
    bool sd_defined = true;
};

struct MetricsTable {
    std::vector<MetricsRow> rows;
    int study = 0;
    char misspec = 'a';
    std::size_t n = 0;
    int reps_requested = 0;
    int reps_used = 0;
    int failures = 0;
    std::uint64_t master_seed = 0;
};

// bias / mean SE / MC SD (sample SD) / coverage of point +- 1.96 se / rmse
// with the population-variance convention rmse^2 = bias^2 + sd^2 (m-1)/m.
MetricsRow summarize_metrics(std::span<const double> points, std::span<const double> ses,
                             double truth);

struct TruthValues {
    double mu[2] = {0.0, 0.0};
    double nu[2] = {0.0, 0.0};
};

// Large-sample numerical integration of the truth functions over the
// covariate generator.
TruthValues compute_truth_values(int study, const SimTruths& truths,
                                 const CovariateGenerator& gen, std::size_t n_truth,
                                 std::uint64_t seed, bool literal_delta = false, int threads = 1);

struct MonteCarloResult {
    MetricsTable table;
    TruthValues truth;
};

// Coverage study: per replicate, generate data with a seed
// derived from (master_seed, replicate), cross-fit all five estimators with
// the scenario's distortions applied to the fitted predictions, then
// aggregate. Replicate failures are excluded; the run fails if more than 1%
// of replicates error.
MonteCarloResult run_monte_carlo(const ScenarioConfig& cfg);
MonteCarloResult run_monte_carlo(const ScenarioConfig& cfg, const SimTruths& truths,
                                 const CovariateGenerator& gen);

}  // namespace ccs
