#include "ccs/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "ccs/errors.hpp"

namespace ccs {

IndependenceTestResult test_a2a3(const Dataset& d, int arm, const ModelSpec& spec, double ridge) {
    std::vector<int> rows;
    long n_rct = 0;
    for (std::size_t i = 0; i < d.n(); ++i) {
        if (d.t(i) == arm) {
            rows.push_back(static_cast<int>(i));
            n_rct += d.r(i);
        }
    }
    if (rows.empty()) throw EmptySubgroup(-1, arm);
    if (n_rct == 0) throw EmptySubgroup(1, arm);
    if (n_rct == static_cast<long>(rows.size())) throw EmptySubgroup(0, arm);

    const std::vector<ExtraColumn> extra{
        {"R", [](const Observation& o) { return static_cast<double>(o.r); }}};
    const AdditiveFit fit =
        fit_logistic_additive(d, rows, TargetVar::Outcome, spec, ridge, extra);

    IndependenceTestResult result;
    result.arm = arm;
    const std::size_t r_col = fit.coefficients.size() - 1;  // extra column is last
    result.log_or = fit.coefficients[r_col];
    result.se = fit.coef_se[r_col];
    result.or_point = std::exp(result.log_or);
    result.or_ci95 = {std::exp(result.log_or - 1.96 * result.se),
                      std::exp(result.log_or + 1.96 * result.se)};
    result.converged = fit.converged;
    return result;
}

namespace {

ProbSummary summarize_probs(std::vector<double> values, const ClipPolicy& clip) {
    ProbSummary s;
    if (values.empty()) return s;
    // predictions arrive already clamped, so a clipped one sits exactly on the boundary
    s.clipped = static_cast<long>(std::count_if(
        values.begin(), values.end(),
        [&](double p) { return p <= clip.epsilon || p >= 1.0 - clip.epsilon; }));
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    auto quantile = [&](double p) {
        const double h = (static_cast<double>(n) - 1.0) * p;
        const std::size_t lo = static_cast<std::size_t>(h);
        if (lo + 1 >= n) return values[n - 1];
        return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
    };
    s.min = values.front();
    s.max = values.back();
    s.q05 = quantile(0.05);
    s.q25 = quantile(0.25);
    s.median = quantile(0.50);
    s.q75 = quantile(0.75);
    s.q95 = quantile(0.95);
    return s;
}

}  // namespace

PositivityReport positivity_report(const Dataset& d, const NuisanceBundle& bundle,
                                   const ClipPolicy& clip) {
    PositivityReport report;
    report.n = static_cast<long>(d.n());
    report.epsilon = clip.epsilon;

    std::vector<double> lambda(d.n()), pi_obs(d.n()), pi_x(d.n());
    for (std::size_t i = 0; i < d.n(); ++i) {
        lambda[i] = bundle.lambda1_at(d.x(i));
        pi_obs[i] = bundle.pi1_obs_at(d.x(i));
        pi_x[i] = compose_pi_t_x(bundle, 1, d.x(i), clip);
    }
    report.lambda1 = summarize_probs(std::move(lambda), clip);
    report.pi1_obs = summarize_probs(std::move(pi_obs), clip);
    report.pi1_x = summarize_probs(std::move(pi_x), clip);
    return report;
}

}  // namespace ccs
