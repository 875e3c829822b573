#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ccs/dataset.hpp"
#include "ccs/nuisance.hpp"

namespace ccs {

// ---- requests ------------------------------------------------------------------

enum class Estimand { Mu, Nu };

enum class AssumptionSet { A1, A1A2, A1A3, A1A2A3 };

struct EstimandRequest {
    Estimand estimand = Estimand::Mu;
    int arm = 1;  // t
    AssumptionSet assumptions = AssumptionSet::A1A2A3;
};

// Mu admits {A1A2, A1A3, A1A2A3}; Nu admits {A1, A1A2A3}. Throws
// InvalidRequest otherwise.
void validate_request(const EstimandRequest& request);

std::string assumptions_label(AssumptionSet a);
std::string estimand_label(Estimand e);
std::string estimator_label(Estimand e, AssumptionSet a);

// ---- reports -------------------------------------------------------------------

struct FoldContribution {
    int fold = 0;
    double fold_point = 0.0;
    double fold_sq_sum = 0.0;
    long n_rows = 0;
};

struct EstimateReport {
    EstimandRequest request;
    double point = 0.0;
    double se = 0.0;
    std::pair<double, double> ci95{0.0, 0.0};
    std::vector<FoldContribution> per_fold;
    std::vector<double> if_values;  // per observation, dataset order
    long n = 0;
    int k = 0;
    std::uint64_t seed = 0;
    bool nuisance_converged = true;
};

enum class ContrastSeMode { IFDifference, IndependentArms };

struct ContrastReport {
    EstimateReport arm1;
    EstimateReport arm0;
    double delta = 0.0;
    double se = 0.0;
    std::pair<double, double> ci95{0.0, 0.0};
    ContrastSeMode se_mode = ContrastSeMode::IFDifference;
};

// ---- cross-fitted nuisances ------------------------------------------------------

// One fitted bundle per fold; bundle k is trained on all rows outside fold k.
// With k = 1 the training set is the full sample (no splitting).
struct CrossfitBundles {
    FoldPlan plan;
    std::vector<NuisanceBundle> bundles;
    std::vector<std::vector<int>> train_rows;  // per fold
    std::vector<std::vector<int>> eval_rows;   // per fold
};

CrossfitBundles fit_crossfit_bundles(const Dataset& d, const FoldPlan& plan,
                                     const NuisanceSpecs& specs, const ClipPolicy& clip,
                                     const NuisanceNeeds& needs,
                                     const Learner& learner = builtin_learner(),
                                     int threads = 1);

// Nuisance functions each estimator family evaluates.
NuisanceNeeds needs_for(const EstimandRequest& request);

// ---- the five estimators ----------------------------------------------------------

// All five share the contract: for each fold k the nuisances fitted without
// fold k are evaluated on fold-k rows only; point = fold contributions
// weighted by fold size; se^2 = sum of per-fold squared centered influence
// values / n^2; ci95 = point +- 1.96 se.

EstimateReport estimate_mu_a1a2(const Dataset& d, const CrossfitBundles& cfb, int arm);
EstimateReport estimate_mu_a1a3(const Dataset& d, const CrossfitBundles& cfb, int arm);
EstimateReport estimate_mu_a1a2a3(const Dataset& d, const CrossfitBundles& cfb, int arm);
EstimateReport estimate_nu_a1(const Dataset& d, const CrossfitBundles& cfb, int arm);
EstimateReport estimate_nu_a1a2a3(const Dataset& d, const CrossfitBundles& cfb, int arm);

EstimateReport estimate(const Dataset& d, const CrossfitBundles& cfb,
                        const EstimandRequest& request);

// Convenience overloads fitting their own bundles.
EstimateReport estimate_mu_a1a2(const Dataset& d, const FoldPlan& plan, int arm,
                                const NuisanceSpecs& specs, const ClipPolicy& clip);
EstimateReport estimate_mu_a1a3(const Dataset& d, const FoldPlan& plan, int arm,
                                const NuisanceSpecs& specs, const ClipPolicy& clip);
EstimateReport estimate_mu_a1a2a3(const Dataset& d, const FoldPlan& plan, int arm,
                                  const NuisanceSpecs& specs, const ClipPolicy& clip);
EstimateReport estimate_nu_a1(const Dataset& d, const FoldPlan& plan, int arm,
                              const NuisanceSpecs& specs, const ClipPolicy& clip);
EstimateReport estimate_nu_a1a2a3(const Dataset& d, const FoldPlan& plan, int arm,
                                  const NuisanceSpecs& specs, const ClipPolicy& clip);

// ---- contrasts and orchestration ----------------------------------------------------

// delta = arm1.point - arm0.point. IFDifference uses the joint influence
// values; IndependentArms ignores the cross-arm covariance (se = sqrt(se1^2 +
// se0^2)). Throws MismatchedRuns when the two reports do not share n, fold
// plan, and assumption set.
ContrastReport contrast(const EstimateReport& r1, const EstimateReport& r0,
                        ContrastSeMode mode = ContrastSeMode::IFDifference);

struct RunOptions {
    FoldMode fold_mode = FoldMode::Balanced;
    ContrastSeMode se_mode = ContrastSeMode::IFDifference;
    int threads = 1;
};

struct RunResult {
    FoldPlan plan;
    std::vector<EstimateReport> reports;      // request order
    std::vector<ContrastReport> contrasts;    // one per (estimand, assumptions) with both arms
    std::vector<std::string> warnings;
};

// One fold plan shared by all requests; nuisance bundles fitted once per fold
// and reused across estimators.
RunResult run_crossfit(const Dataset& d, const std::vector<EstimandRequest>& requests, int k,
                       std::uint64_t seed, const NuisanceSpecs& specs, const ClipPolicy& clip,
                       const RunOptions& options = RunOptions{},
                       const Learner& learner = builtin_learner());

}  // namespace ccs
