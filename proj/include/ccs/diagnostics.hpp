#pragma once

#include <utility>
#include <vector>

#include "ccs/dataset.hpp"
#include "ccs/nuisance.hpp"

namespace ccs {

// Joint test of (A2)+(A3): with (A1) holding, Y must be independent of R
// given T and X, so the R coefficient in a per-arm outcome model should be
// zero. The test cannot attribute a failure to (A2) versus (A3).
struct IndependenceTestResult {
    int arm = 1;
    double log_or = 0.0;
    double se = 0.0;
    double or_point = 1.0;
    std::pair<double, double> or_ci95{1.0, 1.0};
    bool converged = true;
};

// Fits the outcome model on T=arm rows with the given covariate terms plus a
// linear R term; the Wald SE comes from the unpenalized observed information
// at the ridge-penalized optimum.
IndependenceTestResult test_a2a3(const Dataset& d, int arm, const ModelSpec& spec,
                                 double ridge = 1e-6);

struct ProbSummary {
    double min = 0.0;
    double max = 0.0;
    double q05 = 0.0;
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
    double q95 = 0.0;
    long clipped = 0;  // predictions at the clip boundary
};

struct PositivityReport {
    ProbSummary lambda1;
    ProbSummary pi1_obs;
    ProbSummary pi1_x;  // composed marginal propensity for arm 1
    long n = 0;
    double epsilon = 0.0;
};

// Evaluates lambda1(x), pi1(0,x) and the composed pi1(x) on every row.
PositivityReport positivity_report(const Dataset& d, const NuisanceBundle& bundle,
                                   const ClipPolicy& clip);

}  // namespace ccs
