#include <doctest.h>

#include <cmath>

#include "deduct/baselines.hpp"
#include "deduct/errors.hpp"
#include "deduct/simulation.hpp"

using namespace deduct;

namespace {

ObservedRecord complete(int r_obs, double z, double x, int delta, double c = 10.0) {
    ObservedRecord r;
    r.c = c;
    r.r_obs = r_obs;
    r.z = {z};
    r.w = {r_obs == 1 ? kNA : 0.5};
    r.s = r_obs == 0 ? 1 : 0;
    r.x = x;
    r.delta = delta;
    return r;
}

ObservedRecord unsampled(double z) {
    ObservedRecord r;
    r.c = 10.0;
    r.r_obs = 0;
    r.z = {z};
    r.w = {0.5};
    r.s = 0;
    return r;
}

}  // namespace

TEST_CASE("complete-case estimator on hand instances") {
    SUBCASE("all events at distinct times gives the empirical survivor") {
        const Dataset data = canonical_sort(
            {complete(1, 0, 1, 1), complete(1, 0, 2, 1), complete(1, 0, 3, 1),
             complete(1, 0, 4, 1)},
            1, 1);
        CHECK(km_complete_case(data, 0.5).estimate == doctest::Approx(1.0));
        CHECK(km_complete_case(data, 1.0).estimate == doctest::Approx(0.75));
        CHECK(km_complete_case(data, 2.5).estimate == doctest::Approx(0.5));
        CHECK(km_complete_case(data, 4.0).estimate == doctest::Approx(0.0));
    }
    SUBCASE("censoring between events") {
        const Dataset data = canonical_sort(
            {complete(1, 0, 1, 1), complete(1, 0, 2, 0), complete(1, 0, 3, 1)}, 1, 1);
        // S(3) = (1 - 1/3) * (1 - 1/1) = 0
        CHECK(km_complete_case(data, 3.0).estimate == doctest::Approx(0.0));
        CHECK(km_complete_case(data, 2.9).estimate == doctest::Approx(2.0 / 3).epsilon(1e-12));
    }
    SUBCASE("interval is centered on the estimate") {
        const Dataset data = canonical_sort(
            {complete(1, 0, 1, 1), complete(1, 0, 2, 0), complete(1, 0, 3, 1),
             complete(1, 0, 4, 0)},
            1, 1);
        const auto km = km_complete_case(data, 2.0);
        CHECK(km.ci_lo <= km.estimate);
        CHECK(km.estimate <= km.ci_hi);
        CHECK(km.se > 0.0);
    }
    SUBCASE("no complete cases") {
        const Dataset data = canonical_sort({unsampled(0.0), unsampled(1.0)}, 1, 1);
        CHECK_THROWS_AS(km_complete_case(data, 1.0), NoCompleteCases);
    }
}

TEST_CASE("stratified estimator") {
    SUBCASE("identical strata collapse to the pooled curve") {
        const Dataset data = canonical_sort(
            {complete(0, 0, 1, 1), complete(0, 0, 2, 0), complete(1, 0, 1, 1),
             complete(1, 0, 2, 0)},
            1, 1);
        const auto strat = km_stratified(data, 1.5, 50, 7);
        const auto pooled = km_complete_case(data, 1.5);
        CHECK(strat.estimate == doctest::Approx(pooled.estimate).epsilon(1e-12));
    }
    SUBCASE("weighted average of the per-stratum curves") {
        // 3 dropouts (p = 0.6 with the unsampled ones) whose double-sampled
        // curve is 0.5 at t, 2 non-dropouts surviving past t.
        const Dataset data = canonical_sort(
            {complete(0, 0, 1.0, 1), complete(0, 0, 2.0, 1), unsampled(0.5),
             complete(1, 0, 5.0, 1), complete(1, 0, 6.0, 1)},
            1, 1);
        // KM0(1.5) = 0.5, KM1(1.5) = 1.0, weights 0.6 / 0.4.
        const auto strat = km_stratified(data, 1.5, 50, 7);
        CHECK(strat.estimate == doctest::Approx(0.6 * 0.5 + 0.4 * 1.0).epsilon(1e-12));
    }
    SUBCASE("bootstrap interval contains the point estimate") {
        GenerativeConfig config{Gm::GM1, 150, 64, 0, 0.7};
        const Dataset data = generate(config);
        const auto strat = km_stratified(data, 0.7, 400, 11);
        CHECK(strat.ci_lo <= strat.estimate);
        CHECK(strat.estimate <= strat.ci_hi);
        CHECK(strat.ci_lo < strat.ci_hi);
    }
    SUBCASE("empty stratum") {
        const Dataset data =
            canonical_sort({complete(1, 0, 1, 1), complete(1, 0, 2, 0)}, 1, 1);
        CHECK_THROWS_AS(km_stratified(data, 1.0, 10, 3), EmptyStratum);
    }
    SUBCASE("bootstrap is seed-deterministic") {
        GenerativeConfig config{Gm::GM1, 80, 64, 0, 0.7};
        const Dataset data = generate(config);
        const auto a = km_stratified(data, 0.7, 200, 11);
        const auto b = km_stratified(data, 0.7, 200, 11);
        CHECK(a.ci_lo == b.ci_lo);
        CHECK(a.ci_hi == b.ci_hi);
    }
}
