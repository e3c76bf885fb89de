#include "deduct/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "deduct/errors.hpp"
#include "deduct/rng.hpp"

namespace deduct {

namespace {

struct KmCurve {
    double estimate = 1.0;
    double greenwood_var = 0.0;
};

// Unit-mass Kaplan-Meier with Greenwood variance at t.
KmCurve km_at(std::vector<std::pair<double, int>> obs, double t) {
    std::sort(obs.begin(), obs.end());
    KmCurve out;
    double surv = 1.0, var_sum = 0.0;
    std::size_t at_risk = obs.size();
    std::size_t i = 0;
    while (i < obs.size() && at_risk > 0) {
        std::size_t j = i;
        std::size_t d = 0;
        while (j < obs.size() && obs[j].first == obs[i].first) d += obs[j++].second;
        if (obs[i].first > t) break;
        if (d > 0) {
            const double dn = static_cast<double>(d);
            const double yn = static_cast<double>(at_risk);
            surv *= std::max(0.0, 1.0 - dn / yn);
            if (at_risk > d) var_sum += dn / (yn * (yn - dn));
        }
        at_risk -= (j - i);
        i = j;
    }
    out.estimate = surv;
    out.greenwood_var = surv * surv * var_sum;
    return out;
}

std::vector<std::pair<double, int>> complete_cases(const std::vector<const ObservedRecord*>& recs) {
    std::vector<std::pair<double, int>> obs;
    for (const auto* rec : recs)
        if (rec->has_outcome()) obs.push_back({rec->x, rec->delta});
    return obs;
}

double stratified_estimate(const std::vector<const ObservedRecord*>& recs, double t,
                           bool* ok = nullptr) {
    std::vector<std::pair<double, int>> obs0, obs1;
    std::size_t m = 0;
    for (const auto* rec : recs) {
        if (rec->r_obs == 0) {
            ++m;
            if (rec->has_outcome()) obs0.push_back({rec->x, rec->delta});
        } else {
            obs1.push_back({rec->x, rec->delta});
        }
    }
    if (obs0.empty() || obs1.empty()) {
        if (ok) {
            *ok = false;
            return 0.0;
        }
        throw EmptyStratum("stratified estimator needs complete cases in both strata");
    }
    if (ok) *ok = true;
    const double p0 = static_cast<double>(m) / static_cast<double>(recs.size());
    return (1.0 - p0) * km_at(std::move(obs1), t).estimate + p0 * km_at(std::move(obs0), t).estimate;
}

}  // namespace

KmResult km_complete_case(const Dataset& data, double t) {
    std::vector<const ObservedRecord*> recs;
    for (const auto& rec : data.records) recs.push_back(&rec);
    auto obs = complete_cases(recs);
    if (obs.empty()) throw NoCompleteCases("no records with observed outcomes");
    const KmCurve curve = km_at(std::move(obs), t);
    KmResult out;
    out.estimate = curve.estimate;
    out.se = std::sqrt(curve.greenwood_var);
    out.ci_lo = std::max(0.0, curve.estimate - 1.959963984540054 * out.se);
    out.ci_hi = std::min(1.0, curve.estimate + 1.959963984540054 * out.se);
    return out;
}

KmResult km_stratified(const Dataset& data, double t, int n_boot, std::uint64_t seed,
                       std::uint64_t stream) {
    std::vector<const ObservedRecord*> recs;
    for (const auto& rec : data.records) recs.push_back(&rec);
    KmResult out;
    out.estimate = stratified_estimate(recs, t);

    const std::size_t n = recs.size();
    std::vector<double> boots;
    boots.reserve(n_boot);
    RngStream rng(seed, stream);
    std::vector<const ObservedRecord*> sample(n);
    for (int b = 0; b < n_boot; ++b) {
        for (std::size_t i = 0; i < n; ++i)
            sample[i] = recs[static_cast<std::size_t>(rng.uniform() * n)];
        bool ok = false;
        const double est = stratified_estimate(sample, t, &ok);
        if (ok) boots.push_back(est);
    }
    if (boots.empty()) {
        out.ci_lo = out.ci_hi = out.estimate;
        return out;
    }
    std::sort(boots.begin(), boots.end());
    auto quantile = [&](double p) {
        const double pos = p * (boots.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, boots.size() - 1);
        return boots[lo] + (pos - lo) * (boots[hi] - boots[lo]);
    };
    out.ci_lo = quantile(0.025);
    out.ci_hi = quantile(0.975);
    double mean = 0.0;
    for (double v : boots) mean += v;
    mean /= boots.size();
    double var = 0.0;
    for (double v : boots) var += (v - mean) * (v - mean);
    out.se = boots.size() > 1 ? std::sqrt(var / (boots.size() - 1)) : 0.0;
    return out;
}

}  // namespace deduct
