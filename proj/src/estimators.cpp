#include "ccs/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "ccs/errors.hpp"
#include "ccs/parallel.hpp"

namespace ccs {

namespace {

constexpr double kZ95 = 1.96;

double indicator(int value, int arm) { return value == arm ? 1.0 : 0.0; }

}  // namespace

// ---- labels and validation ----

std::string assumptions_label(AssumptionSet a) {
    switch (a) {
        case AssumptionSet::A1: return "a1";
        case AssumptionSet::A1A2: return "a1a2";
        case AssumptionSet::A1A3: return "a1a3";
        case AssumptionSet::A1A2A3: return "a1a2a3";
    }
    return "?";
}

std::string estimand_label(Estimand e) { return e == Estimand::Mu ? "mu" : "nu"; }

std::string estimator_label(Estimand e, AssumptionSet a) {
    return estimand_label(e) + ":" + assumptions_label(a);
}

void validate_request(const EstimandRequest& request) {
    if (request.arm != 0 && request.arm != 1) {
        throw InvalidRequest("arm must be 0 or 1, got " + std::to_string(request.arm));
    }
    if (request.estimand == Estimand::Mu) {
        if (request.assumptions == AssumptionSet::A1) {
            throw InvalidRequest("mu is not identified under A1 alone");
        }
    } else {
        if (request.assumptions != AssumptionSet::A1 &&
            request.assumptions != AssumptionSet::A1A2A3) {
            throw InvalidRequest("nu admits assumption sets a1 and a1a2a3 only");
        }
    }
}

NuisanceNeeds needs_for(const EstimandRequest& request) {
    NuisanceNeeds needs;
    const int t = request.arm;
    if (request.estimand == Estimand::Mu) {
        switch (request.assumptions) {
            case AssumptionSet::A1A2:
                needs.pi1_obs = true;
                needs.tau_rt[t][0] = true;
                needs.tau_rt[t][1] = true;
                break;
            case AssumptionSet::A1A3:
                needs.lambda1 = true;
                needs.tau_rt[t][1] = true;
                break;
            default:
                needs.lambda1 = true;
                needs.pi1_obs = true;
                needs.tau_pooled[t] = true;
                break;
        }
    } else {
        if (request.assumptions == AssumptionSet::A1) {
            needs.tau_rt[t][1] = true;
        } else {
            needs.lambda1 = true;
            needs.pi1_obs = true;
            needs.tau_pooled[t] = true;
        }
    }
    return needs;
}

// ---- cross-fitted bundles ----

CrossfitBundles fit_crossfit_bundles(const Dataset& d, const FoldPlan& plan,
                                     const NuisanceSpecs& specs, const ClipPolicy& clip,
                                     const NuisanceNeeds& needs, const Learner& learner,
                                     int threads) {
    if (plan.assignment.size() != d.n()) {
        throw EstimationError("fold plan covers " + std::to_string(plan.assignment.size()) +
                              " rows, dataset has " + std::to_string(d.n()));
    }
    const int k = plan.k;
    CrossfitBundles cfb;
    cfb.plan = plan;
    cfb.bundles.resize(static_cast<std::size_t>(k));
    cfb.train_rows.resize(static_cast<std::size_t>(k));
    cfb.eval_rows.resize(static_cast<std::size_t>(k));

    const std::vector<std::vector<int>> members = plan.fold_members();
    for (int fold = 0; fold < k; ++fold) {
        const std::size_t f = static_cast<std::size_t>(fold);
        if (members[f].empty()) throw EmptyFold(fold + 1);
        cfb.eval_rows[f] = canonical_order(d, members[f]);
        if (k == 1) {
            // no held-out data: train and evaluate on the full sample
            cfb.train_rows[f] = cfb.eval_rows[f];
        } else {
            std::vector<int> train;
            train.reserve(d.n() - members[f].size());
            for (std::size_t i = 0; i < d.n(); ++i) {
                if (plan.assignment[i] != fold + 1) train.push_back(static_cast<int>(i));
            }
            cfb.train_rows[f] = canonical_order(d, train);
        }
    }

    parallel_for(static_cast<std::size_t>(k), threads, [&](std::size_t f) {
        cfb.bundles[f] = fit_bundle(d, cfb.train_rows[f], specs, clip, needs, learner);
    });
    return cfb;
}

// ---- shared evaluation skeletons ----

namespace {

using PhiFn = std::function<double(const Observation&, const NuisanceBundle&)>;

EstimateReport finalize_report(const Dataset& d, const CrossfitBundles& cfb,
                               const EstimandRequest& request,
                               std::vector<FoldContribution> per_fold,
                               std::vector<double> if_values) {
    EstimateReport report;
    report.request = request;
    report.n = static_cast<long>(d.n());
    report.k = cfb.plan.k;
    report.seed = cfb.plan.seed;
    report.per_fold = std::move(per_fold);
    report.if_values = std::move(if_values);

    double point = 0.0;
    double sq_total = 0.0;
    for (const FoldContribution& fc : report.per_fold) {
        point += fc.fold_point * static_cast<double>(fc.n_rows);
        sq_total += fc.fold_sq_sum;
    }
    const double n = static_cast<double>(report.n);
    report.point = point / n;
    report.se = std::sqrt(sq_total / (n * n));
    report.ci95 = {report.point - kZ95 * report.se, report.point + kZ95 * report.se};
    report.nuisance_converged = true;
    for (const NuisanceBundle& b : cfb.bundles) {
        report.nuisance_converged = report.nuisance_converged && b.all_converged();
    }
    return report;
}

// mu-type estimator: fold contribution is the fold mean of phi, influence
// values are centered at the fold mean.
EstimateReport evaluate_mu(const Dataset& d, const CrossfitBundles& cfb,
                           const EstimandRequest& request, const PhiFn& phi) {
    const int k = cfb.plan.k;
    std::vector<FoldContribution> per_fold(static_cast<std::size_t>(k));
    std::vector<double> if_values(d.n(), 0.0);

    for (int fold = 0; fold < k; ++fold) {
        const std::size_t f = static_cast<std::size_t>(fold);
        const NuisanceBundle& bundle = cfb.bundles[f];
        const std::vector<int>& rows = cfb.eval_rows[f];
        const double n_k = static_cast<double>(rows.size());

        double sum = 0.0;
        std::vector<double> values(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            values[i] = phi(d.row(static_cast<std::size_t>(rows[i])), bundle);
            sum += values[i];
        }
        const double fold_point = sum / n_k;
        double sq = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double centered = values[i] - fold_point;
            if_values[static_cast<std::size_t>(rows[i])] = centered;
            sq += centered * centered;
        }
        per_fold[f] = FoldContribution{fold + 1, fold_point, sq, static_cast<long>(rows.size())};
    }
    return finalize_report(d, cfb, request, std::move(per_fold), std::move(if_values));
}

using PluginFn = std::function<double(const NuisanceBundle&, const Dataset&,
                                      const std::vector<int>&)>;

// nu-type estimator: training-fold plug-in plus a fold-k correction whose
// terms carry the R/lambda1 weight; influence values are centered with the
// corrected fold estimate as the constant.
EstimateReport evaluate_nu(const Dataset& d, const CrossfitBundles& cfb,
                           const EstimandRequest& request, const PluginFn& plugin,
                           const PhiFn& g) {
    const int k = cfb.plan.k;
    std::vector<FoldContribution> per_fold(static_cast<std::size_t>(k));
    std::vector<double> if_values(d.n(), 0.0);

    for (int fold = 0; fold < k; ++fold) {
        const std::size_t f = static_cast<std::size_t>(fold);
        const NuisanceBundle& bundle = cfb.bundles[f];
        if (!(bundle.lambda1_scalar > 0.0)) throw EmptySubgroup(1, -1);
        const std::vector<int>& rows = cfb.eval_rows[f];
        const double n_k = static_cast<double>(rows.size());

        const double nu_plugin = plugin(bundle, d, cfb.train_rows[f]);

        std::vector<double> g_values(rows.size());
        std::vector<double> weights(rows.size());
        double correction = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const Observation& o = d.row(static_cast<std::size_t>(rows[i]));
            g_values[i] = g(o, bundle);
            weights[i] = static_cast<double>(o.r) / bundle.lambda1_scalar;
            correction += g_values[i] - weights[i] * nu_plugin;
        }
        const double fold_point = nu_plugin + correction / n_k;

        double sq = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double centered = g_values[i] - weights[i] * fold_point;
            if_values[static_cast<std::size_t>(rows[i])] = centered;
            sq += centered * centered;
        }
        per_fold[f] = FoldContribution{fold + 1, fold_point, sq, static_cast<long>(rows.size())};
    }
    return finalize_report(d, cfb, request, std::move(per_fold), std::move(if_values));
}

}  // namespace

// ---- the five estimators ----

EstimateReport estimate_mu_a1a2(const Dataset& d, const CrossfitBundles& cfb, int arm) {
    const EstimandRequest request{Estimand::Mu, arm, AssumptionSet::A1A2};
    return evaluate_mu(d, cfb, request, [arm](const Observation& o, const NuisanceBundle& b) {
        const double pi = b.pi_rx(arm, o.r, o.x);
        const double tau = b.tau_at(arm, o.r, o.x);
        const double it = indicator(o.t, arm);
        return it * o.y / pi + (1.0 - it / pi) * tau;
    });
}

EstimateReport estimate_mu_a1a3(const Dataset& d, const CrossfitBundles& cfb, int arm) {
    const EstimandRequest request{Estimand::Mu, arm, AssumptionSet::A1A3};
    return evaluate_mu(d, cfb, request, [arm](const Observation& o, const NuisanceBundle& b) {
        const double denom = b.lambda1_at(o.x) * b.pi_t1_arm(arm);
        const double tau1 = b.tau_at(arm, 1, o.x);
        const double w = static_cast<double>(o.r) * indicator(o.t, arm) / denom;
        return w * o.y + (1.0 - w) * tau1;
    });
}

EstimateReport estimate_mu_a1a2a3(const Dataset& d, const CrossfitBundles& cfb, int arm) {
    const EstimandRequest request{Estimand::Mu, arm, AssumptionSet::A1A2A3};
    return evaluate_mu(d, cfb, request, [arm](const Observation& o, const NuisanceBundle& b) {
        const double pi = compose_pi_t_x(b, arm, o.x, b.clip);
        const double tau = b.tau_pooled_at(arm, o.x);
        const double it = indicator(o.t, arm);
        return it * o.y / pi + (1.0 - it / pi) * tau;
    });
}

EstimateReport estimate_nu_a1(const Dataset& d, const CrossfitBundles& cfb, int arm) {
    const EstimandRequest request{Estimand::Nu, arm, AssumptionSet::A1};
    const PluginFn plugin = [arm](const NuisanceBundle& b, const Dataset& data,
                                  const std::vector<int>& train) {
        double sum = 0.0;
        for (int row : train) {
            const Observation& o = data.row(static_cast<std::size_t>(row));
            sum += static_cast<double>(o.r) * b.tau_at(arm, 1, o.x);
        }
        return sum / (static_cast<double>(train.size()) * b.lambda1_scalar);
    };
    const PhiFn g = [arm](const Observation& o, const NuisanceBundle& b) {
        const double r_w = static_cast<double>(o.r) / b.lambda1_scalar;
        const double pi = b.pi_t1_arm(arm);
        const double it = indicator(o.t, arm);
        return r_w * (it * o.y / pi + (1.0 - it / pi) * b.tau_at(arm, 1, o.x));
    };
    return evaluate_nu(d, cfb, request, plugin, g);
}

EstimateReport estimate_nu_a1a2a3(const Dataset& d, const CrossfitBundles& cfb, int arm) {
    const EstimandRequest request{Estimand::Nu, arm, AssumptionSet::A1A2A3};
    const PluginFn plugin = [arm](const NuisanceBundle& b, const Dataset& data,
                                  const std::vector<int>& train) {
        double sum = 0.0;
        for (int row : train) {
            const Observation& o = data.row(static_cast<std::size_t>(row));
            sum += b.lambda1_at(o.x) * b.tau_pooled_at(arm, o.x);
        }
        return sum / (static_cast<double>(train.size()) * b.lambda1_scalar);
    };
    const PhiFn g = [arm](const Observation& o, const NuisanceBundle& b) {
        const double lambda_x = b.lambda1_at(o.x);
        const double pi_x = compose_pi_t_x(b, arm, o.x, b.clip);
        const double tau = b.tau_pooled_at(arm, o.x);
        const double it = indicator(o.t, arm);
        return it * lambda_x * o.y / (b.lambda1_scalar * pi_x) +
               (static_cast<double>(o.r) - it * lambda_x / pi_x) * tau / b.lambda1_scalar;
    };
    return evaluate_nu(d, cfb, request, plugin, g);
}

EstimateReport estimate(const Dataset& d, const CrossfitBundles& cfb,
                        const EstimandRequest& request) {
    validate_request(request);
    if (request.estimand == Estimand::Mu) {
        switch (request.assumptions) {
            case AssumptionSet::A1A2: return estimate_mu_a1a2(d, cfb, request.arm);
            case AssumptionSet::A1A3: return estimate_mu_a1a3(d, cfb, request.arm);
            default: return estimate_mu_a1a2a3(d, cfb, request.arm);
        }
    }
    if (request.assumptions == AssumptionSet::A1) return estimate_nu_a1(d, cfb, request.arm);
    return estimate_nu_a1a2a3(d, cfb, request.arm);
}

namespace {

EstimateReport estimate_standalone(const Dataset& d, const FoldPlan& plan,
                                   const EstimandRequest& request, const NuisanceSpecs& specs,
                                   const ClipPolicy& clip) {
    const CrossfitBundles cfb =
        fit_crossfit_bundles(d, plan, specs, clip, needs_for(request), builtin_learner(), 1);
    return estimate(d, cfb, request);
}

}  // namespace

EstimateReport estimate_mu_a1a2(const Dataset& d, const FoldPlan& plan, int arm,
                                const NuisanceSpecs& specs, const ClipPolicy& clip) {
    return estimate_standalone(d, plan, {Estimand::Mu, arm, AssumptionSet::A1A2}, specs, clip);
}
EstimateReport estimate_mu_a1a3(const Dataset& d, const FoldPlan& plan, int arm,
                                const NuisanceSpecs& specs, const ClipPolicy& clip) {
    return estimate_standalone(d, plan, {Estimand::Mu, arm, AssumptionSet::A1A3}, specs, clip);
}
EstimateReport estimate_mu_a1a2a3(const Dataset& d, const FoldPlan& plan, int arm,
                                  const NuisanceSpecs& specs, const ClipPolicy& clip) {
    return estimate_standalone(d, plan, {Estimand::Mu, arm, AssumptionSet::A1A2A3}, specs, clip);
}
EstimateReport estimate_nu_a1(const Dataset& d, const FoldPlan& plan, int arm,
                              const NuisanceSpecs& specs, const ClipPolicy& clip) {
    return estimate_standalone(d, plan, {Estimand::Nu, arm, AssumptionSet::A1}, specs, clip);
}
EstimateReport estimate_nu_a1a2a3(const Dataset& d, const FoldPlan& plan, int arm,
                                  const NuisanceSpecs& specs, const ClipPolicy& clip) {
    return estimate_standalone(d, plan, {Estimand::Nu, arm, AssumptionSet::A1A2A3}, specs, clip);
}

// ---- contrasts ----

ContrastReport contrast(const EstimateReport& r1, const EstimateReport& r0, ContrastSeMode mode) {
    if (r1.n != r0.n) throw MismatchedRuns("different sample sizes");
    if (r1.k != r0.k || r1.seed != r0.seed) throw MismatchedRuns("different fold plans");
    if (r1.request.estimand != r0.request.estimand ||
        r1.request.assumptions != r0.request.assumptions) {
        throw MismatchedRuns("different estimand or assumption set");
    }
    if (r1.per_fold.size() != r0.per_fold.size()) throw MismatchedRuns("different fold plans");
    for (std::size_t f = 0; f < r1.per_fold.size(); ++f) {
        if (r1.per_fold[f].n_rows != r0.per_fold[f].n_rows) {
            throw MismatchedRuns("different fold sizes");
        }
    }

    ContrastReport c;
    c.arm1 = r1;
    c.arm0 = r0;
    c.se_mode = mode;
    c.delta = r1.point - r0.point;
    if (mode == ContrastSeMode::IFDifference) {
        const double n = static_cast<double>(r1.n);
        double sq = 0.0;
        for (std::size_t i = 0; i < r1.if_values.size(); ++i) {
            const double diff = r1.if_values[i] - r0.if_values[i];
            sq += diff * diff;
        }
        c.se = std::sqrt(sq / (n * n));
    } else {
        c.se = std::sqrt(r1.se * r1.se + r0.se * r0.se);
    }
    c.ci95 = {c.delta - kZ95 * c.se, c.delta + kZ95 * c.se};
    return c;
}

// ---- orchestration ----

RunResult run_crossfit(const Dataset& d, const std::vector<EstimandRequest>& requests, int k,
                       std::uint64_t seed, const NuisanceSpecs& specs, const ClipPolicy& clip,
                       const RunOptions& options, const Learner& learner) {
    if (requests.empty()) throw InvalidRequest("no estimands requested");
    NuisanceNeeds needs;
    for (const EstimandRequest& request : requests) {
        validate_request(request);
        needs.merge(needs_for(request));
    }

    RunResult result;
    if (k == 1) {
        result.warnings.push_back(
            "K=1 disables sample splitting; the influence-function SEs assume K >= 2 "
            "independent folds");
    }
    result.plan = make_folds(d.n(), k, seed, options.fold_mode);
    const CrossfitBundles cfb =
        fit_crossfit_bundles(d, result.plan, specs, clip, needs, learner, options.threads);

    result.reports.reserve(requests.size());
    for (const EstimandRequest& request : requests) {
        result.reports.push_back(estimate(d, cfb, request));
    }

    // pair arms within each (estimand, assumptions) group, in request order
    std::vector<std::pair<Estimand, AssumptionSet>> seen;
    for (const EstimandRequest& request : requests) {
        const std::pair<Estimand, AssumptionSet> key{request.estimand, request.assumptions};
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(key);
        const EstimateReport* arm1 = nullptr;
        const EstimateReport* arm0 = nullptr;
        for (const EstimateReport& report : result.reports) {
            if (report.request.estimand != key.first || report.request.assumptions != key.second) {
                continue;
            }
            if (report.request.arm == 1 && arm1 == nullptr) arm1 = &report;
            if (report.request.arm == 0 && arm0 == nullptr) arm0 = &report;
        }
        if (arm1 != nullptr && arm0 != nullptr) {
            result.contrasts.push_back(contrast(*arm1, *arm0, options.se_mode));
        }
    }
    return result;
}

}  // namespace ccs
