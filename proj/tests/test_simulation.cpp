#include <doctest.h>

#include <cmath>
#include <limits>

#include "deduct/errors.hpp"
#include "deduct/rng.hpp"
#include "deduct/simulation.hpp"
#include "deduct/stats.hpp"

using namespace deduct;

TEST_CASE("generation is deterministic given seed and stream") {
    GenerativeConfig config{Gm::GM1, 50, 42, 3, 0.7};
    const Dataset a = generate(config);
    const Dataset b = generate(config);
    REQUIRE(a.n == b.n);
    for (std::size_t i = 0; i < a.n; ++i) {
        CHECK(a.records[i].c == b.records[i].c);
        CHECK(na_equal(a.records[i].x, b.records[i].x));
    }
    config.stream = 4;
    const Dataset c = generate(config);
    bool identical = true;
    for (std::size_t i = 0; i < a.n; ++i) identical = identical && a.records[i].c == c.records[i].c;
    CHECK_FALSE(identical);
}

TEST_CASE("masking rules satisfy the record invariants") {
    for (Gm gm : {Gm::GM1, Gm::GM2}) {
        GenerativeConfig config{gm, 400, 7, 0, 0.7};
        const auto latent = generate_latent(config);
        for (const auto& d : latent) {
            if (d.r == 1) CHECK(d.r_obs == 1);
            if (d.r_obs == 1) {
                CHECK(d.s == 0);
                CHECK(is_na(d.l));
            }
            if (d.r_obs == 1 || d.s == 1) {
                CHECK(d.x == std::min(d.t, d.c));
                CHECK(d.delta == (d.t <= d.c ? 1 : 0));
            } else {
                CHECK(is_na(d.x));
                CHECK(d.delta == kDeltaNA);
            }
        }
        // canonical_sort validates every record on the way through.
        CHECK_NOTHROW(generate(config));
    }
}

TEST_CASE("true survival targets") {
    CHECK(true_tau(Gm::GM1, 0.0, 100000, 3) == doctest::Approx(1.0));
    // Monte Carlo agreement with the generative-model targets (3 MC sds).
    CHECK(true_tau(Gm::GM1, 0.7, 400000, 3) == doctest::Approx(0.771).epsilon(0.004));
    CHECK(true_tau(Gm::GM2, 0.7, 400000, 3) == doctest::Approx(0.588).epsilon(0.005));
}

TEST_CASE("partial correlation of independent series vanishes") {
    RngStream rng(17, 0);
    std::vector<double> t(4000), c(4000), z(4000);
    for (std::size_t i = 0; i < t.size(); ++i) {
        z[i] = rng.uniform(-1, 1);
        t[i] = rng.normal();
        c[i] = rng.normal();
    }
    CHECK(partial_correlation(t, c, {&z}) == doctest::Approx(0.0).epsilon(1.0).scale(0.05));
}

TEST_CASE("recency restriction") {
    GenerativeConfig config{Gm::GM1, 300, 2022, 0, 0.7};
    const Dataset data = generate(config);

    SUBCASE("infinite gamma is the identity") {
        const Dataset same = apply_gamma_restriction(data, std::numeric_limits<double>::infinity());
        CHECK(same.m1 == data.m1);
        for (std::size_t i = 0; i < data.n; ++i)
            CHECK(na_equal(same.records[i].x, data.records[i].x));
    }
    SUBCASE("the masking rule applies record by record") {
        ObservedRecord far;
        far.c = 3.0;
        far.r_obs = 0;
        far.z = {0.0};
        far.w = {0.4};  // c - L = 2.6 > 2
        far.s = 1;
        far.x = 1.0;
        far.delta = 1;
        ObservedRecord near = far;
        near.w = {1.5};  // c - L = 1.5 <= 2
        ObservedRecord keep;
        keep.c = 3.0;
        keep.r_obs = 1;
        keep.z = {0.0};
        keep.w = {kNA};
        keep.x = 2.0;
        keep.delta = 0;
        const Dataset small = canonical_sort({far, near, keep}, 1, 1);
        const Dataset masked = apply_gamma_restriction(small, 2.0);
        CHECK(masked.m1 == 1);
        for (const auto& rec : masked.records) {
            if (rec.r_obs == 0 && rec.w[0] == 0.4) {
                CHECK(rec.s == 0);
                CHECK(is_na(rec.x));
            }
            if (rec.r_obs == 0 && rec.w[0] == 1.5) CHECK(rec.s == 1);
        }
    }
    SUBCASE("idempotent and monotone in gamma") {
        const Dataset g2 = apply_gamma_restriction(data, 1.0);
        const Dataset g2_again = apply_gamma_restriction(g2, 1.0);
        CHECK(g2.m1 == g2_again.m1);
        const Dataset g1 = apply_gamma_restriction(data, 0.5);
        CHECK(g1.m1 <= g2.m1);
        CHECK(g2.m1 <= data.m1);
        // The gamma' < gamma masking is a superset: every double-sample kept
        // at gamma' is kept at gamma.
        for (const auto& rec : g1.records) {
            if (rec.r_obs != 0 || rec.s != 1) continue;
            CHECK(rec.c - rec.w[0] <= 0.5);
        }
    }
    SUBCASE("missing dropout-time column") {
        CHECK_THROWS_AS(apply_gamma_restriction(data, 1.0, 5), MissingDropoutTime);
    }
}

TEST_CASE("replicate harness determinism and bookkeeping") {
    ReplicateOptions opts;
    opts.n_boot = 100;
    opts.n_mc = 100000;
    const std::vector<EstimatorKind> kinds = {EstimatorKind::KmC, EstimatorKind::KmS};
    const auto a = run_replicates(Gm::GM1, 60, kinds, 10, 99, opts);
    const auto b = run_replicates(Gm::GM1, 60, kinds, 10, 99, opts);
    REQUIRE(a.size() == 2);
    CHECK(a[0].bias_points == b[0].bias_points);
    CHECK(a[0].cp_percent == b[0].cp_percent);
    CHECK(a[0].sd_points == b[0].sd_points);
    CHECK(a[0].n_replicates + a[0].n_failures == 10);
    CHECK(a[1].sd_points > 0.0);

    SUBCASE("worker count does not change the summaries") {
        ReplicateOptions par = opts;
        par.workers = 3;
        const auto c = run_replicates(Gm::GM1, 60, kinds, 10, 99, par);
        CHECK(c[0].bias_points == a[0].bias_points);
        CHECK(c[1].cp_percent == a[1].cp_percent);
    }
}

TEST_CASE("estimator names are stable identifiers") {
    CHECK(std::string(estimator_name(EstimatorKind::DeCox)) == "DE.Cox");
    CHECK(std::string(estimator_name(EstimatorKind::DeLnAlpha0)) == "DE.LN(alpha=0)");
    CHECK(std::string(estimator_name(EstimatorKind::KmS)) == "KM.S");
}
