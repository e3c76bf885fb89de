#include <doctest.h>

#include <cmath>

#include "deduct/estimand.hpp"
#include "deduct/rng.hpp"
#include "deduct/simulation.hpp"
#include "deduct/support.hpp"
#include "deduct/working_models.hpp"
#include "oracles.hpp"

using namespace deduct;

namespace {

// A tiny two-stratum dataset whose support has |omega| = 8:
// stratum 0: 1 cell x (NA triple + 2 pairs), stratum 1: 1 cell x 2 pairs...
// kept small enough for hand reasoning, varied enough to exercise mixing.
Dataset small_dataset() {
    auto d0 = [](double z, double w, int s, double x, int delta) {
        ObservedRecord r;
        r.c = 5.0;
        r.r_obs = 0;
        r.z = {z};
        r.w = {w};
        r.s = s;
        if (s == 1) {
            r.x = x;
            r.delta = delta;
        }
        return r;
    };
    auto d1 = [](double z, double x, int delta) {
        ObservedRecord r;
        r.c = 5.0;
        r.r_obs = 1;
        r.z = {z};
        r.w = {kNA};
        r.x = x;
        r.delta = delta;
        return r;
    };
    return canonical_sort({d0(1, 2, 1, 1.0, 1), d0(1, 2, 1, 2.0, 0), d0(1, 2, 0, 0, 0),
                           d1(1, 1.5, 1), d1(3, 2.5, 0)},
                          1, 1);
}

DiscreteDistribution random_distribution(const DiscretizedSupport& sup, RngStream& rng) {
    DiscreteDistribution g;
    g.support = &sup;
    g.probs.resize(sup.size());
    double total = 0.0;
    for (auto& p : g.probs) {
        p = rng.uniform();
        total += p;
    }
    for (auto& p : g.probs) p /= total;
    return g;
}

}  // namespace

TEST_CASE("uniform mass splits the strata by point count") {
    const Dataset data = small_dataset();
    const auto sup = build_support(data);
    DiscreteDistribution g;
    g.support = &sup;
    g.probs.assign(sup.size(), 1.0 / sup.size());
    const auto comp = components_from_distribution(g);
    CHECK(comp.p_robs1 ==
          doctest::Approx(static_cast<double>(sup.omega1_size()) / sup.size()).epsilon(1e-12));
}

TEST_CASE("components match brute-force indicator sums") {
    const Dataset data = small_dataset();
    const auto sup = build_support(data);
    RngStream rng(2024, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const auto g = random_distribution(sup, rng);
        const auto comp = components_from_distribution(g);
        const auto brute = oracles::brute_components(g);
        CHECK(comp.p_robs1 == doctest::Approx(brute.p_robs1).epsilon(1e-13));
        for (std::size_t zi = 0; zi < comp.z1_values.size(); ++zi) {
            double expected = 0.0;
            for (const auto& [z, mass] : brute.p_z1)
                if (na_equal(z, comp.z1_values[zi])) expected = mass;
            CHECK(comp.p_z1[zi] == doctest::Approx(expected).epsilon(1e-12));
            for (std::size_t k = 0; k < sup.sxd1.size(); ++k) {
                const auto& key = sup.sxd1[k];
                CHECK(comp.xdelta_given_z1[zi * sup.sxd1.size() + k] ==
                      doctest::Approx(brute.xdelta_given_z1(comp.z1_values[zi], key.x, key.delta))
                          .epsilon(1e-12));
            }
        }
        for (std::size_t c = 0; c < sup.zw0.size(); ++c) {
            double expected = 0.0;
            for (const auto& [zw, mass] : brute.p_zw0)
                if (na_equal(zw.first, sup.zw0[c].z) && na_equal(zw.second, sup.zw0[c].w))
                    expected = mass;
            CHECK(comp.p_zw0[c] == doctest::Approx(expected).epsilon(1e-12));
            for (std::size_t k = 0; k < sup.pairs0.size(); ++k) {
                const auto& key = sup.sxd0[sup.pairs0[k]];
                CHECK(comp.xdelta_given_zw0[c * sup.pairs0.size() + k] ==
                      doctest::Approx(brute.xdelta_given_zw0_s1(sup.zw0[c].z, sup.zw0[c].w, key.x,
                                                                key.delta))
                          .epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("product-limit on hand instances") {
    SUBCASE("one atom dying at 1") {
        const std::vector<OutcomeAtom> atoms = {{1.0, 1, 1.0}};
        CHECK(survt_product_limit(atoms, 0.5) == doctest::Approx(1.0));
        CHECK(survt_product_limit(atoms, 1.0) == doctest::Approx(0.0));
    }
    SUBCASE("no events means unit survival") {
        const std::vector<OutcomeAtom> atoms = {{1.0, 0, 0.4}, {2.0, 0, 0.6}};
        CHECK(survt_product_limit(atoms, 10.0) == doctest::Approx(1.0));
    }
    SUBCASE("three equal atoms") {
        const std::vector<OutcomeAtom> atoms = {{1.0, 1, 1.0 / 3}, {2.0, 0, 1.0 / 3},
                                                {3.0, 1, 1.0 / 3}};
        CHECK(survt_product_limit(atoms, 1.0) == doctest::Approx(2.0 / 3).epsilon(1e-12));
        CHECK(survt_product_limit(atoms, 2.0) == doctest::Approx(2.0 / 3).epsilon(1e-12));
        CHECK(survt_product_limit(atoms, 3.0) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("splitting an atom changes nothing") {
        const std::vector<OutcomeAtom> atoms = {{1.0, 1, 0.5}, {2.0, 0, 0.5}};
        const std::vector<OutcomeAtom> split = {{1.0, 1, 0.25}, {1.0, 1, 0.25}, {2.0, 0, 0.5}};
        for (double t : {0.5, 1.0, 1.5, 2.0})
            CHECK(survt_product_limit(atoms, t) ==
                  doctest::Approx(survt_product_limit(split, t)).epsilon(1e-14));
    }
}

TEST_CASE("product-limit matches the exact rational oracle") {
    RngStream rng(555, 0);
    for (int trial = 0; trial < 30; ++trial) {
        const int n_atoms = 2 + static_cast<int>(rng.uniform() * 5);  // 2..6
        std::vector<oracles::RationalAtom> ratoms;
        std::vector<OutcomeAtom> atoms;
        for (int k = 0; k < n_atoms; ++k) {
            const std::int64_t x4 = 1 + static_cast<std::int64_t>(rng.uniform() * 10);
            const int delta = rng.bernoulli(0.6) ? 1 : 0;
            const std::int64_t num = 1 + static_cast<std::int64_t>(rng.uniform() * 5);
            const std::int64_t den = 7 + static_cast<std::int64_t>(rng.uniform() * 6);
            ratoms.push_back({x4, delta, num, den});
            atoms.push_back({x4 / 4.0, delta, static_cast<double>(num) / den});
        }
        const std::int64_t t4 = 1 + static_cast<std::int64_t>(rng.uniform() * 12);
        const auto exact = oracles::rational_product_limit(ratoms, t4);
        CHECK(survt_product_limit(atoms, t4 / 4.0) ==
              doctest::Approx(exact.value()).epsilon(1e-12));
    }
}

TEST_CASE("per-z mixture behavior") {
    const Dataset data = small_dataset();
    const auto sup = build_support(data);
    RngStream rng(808, 0);
    const auto g = random_distribution(sup, rng);
    const auto comp = components_from_distribution(g);

    SUBCASE("mixture weights over the strata total pr(z)") {
        for (std::size_t zi = 0; zi < comp.z_values.size(); ++zi) {
            double prz = 0.0;
            auto atoms = marginal_xdelta_given_z(comp, zi, &prz);
            double expected = 0.0;
            for (std::size_t j = 0; j < comp.z_of_zw0.size(); ++j)
                if (comp.z_of_zw0[j] == zi) expected += comp.p_robs0 * comp.p_zw0[j];
            for (std::size_t j = 0; j < comp.z_of_z1.size(); ++j)
                if (comp.z_of_z1[j] == zi) expected += comp.p_robs1 * comp.p_z1[j];
            CHECK(prz == doctest::Approx(expected).epsilon(1e-12));
            double mass = 0.0;
            for (const auto& a : atoms) mass += a.mass;
            CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("a z seen only in one stratum reduces to that stratum's table") {
        // z = 3 appears only among r_obs=1 points.
        std::size_t zi = comp.z_values.size();
        for (std::size_t i = 0; i < comp.z_values.size(); ++i)
            if (na_equal(comp.z_values[i], {3.0})) zi = i;
        REQUIRE(zi < comp.z_values.size());
        auto atoms = marginal_xdelta_given_z(comp, zi);
        const auto brute = oracles::brute_components(g);
        for (const auto& a : atoms)
            CHECK(a.mass ==
                  doctest::Approx(brute.xdelta_given_z1({3.0}, a.x, a.delta)).epsilon(1e-12));
    }
}

TEST_CASE("the survival functional") {
    const Dataset data = small_dataset();
    const auto sup = build_support(data);
    RngStream rng(909, 0);

    SUBCASE("matches exhaustive evaluation on random tables") {
        for (int trial = 0; trial < 10; ++trial) {
            const auto g = random_distribution(sup, rng);
            for (double t : {0.5, 1.2, 1.9, 2.6})
                CHECK(tau_of_distribution(g, t) ==
                      doctest::Approx(oracles::brute_tau(g, t)).epsilon(1e-11));
        }
    }
    SUBCASE("bounded and nonincreasing in t") {
        const auto g = random_distribution(sup, rng);
        double prev = 1.0;
        for (double t = 0.0; t <= 3.0; t += 0.1) {
            const double tau = tau_of_distribution(g, t);
            CHECK(tau >= -1e-14);
            CHECK(tau <= 1.0 + 1e-14);
            CHECK(tau <= prev + 1e-12);
            prev = tau;
        }
    }
    SUBCASE("a single z value reduces to the pooled table's product limit") {
        // Collapse stratum-1 z values onto the stratum-0 one.
        auto records = data.records;
        for (auto& r : records) r.z = {1.0};
        const Dataset collapsed = canonical_sort(std::move(records), 1, 1);
        const auto sup2 = build_support(collapsed);
        const auto g = random_distribution(sup2, rng);
        const auto comp = components_from_distribution(g);
        REQUIRE(comp.z_values.size() == 1);
        double prz = 0.0;
        auto atoms = marginal_xdelta_given_z(comp, 0, &prz);
        CHECK(prz == doctest::Approx(1.0).epsilon(1e-12));
        for (double t : {0.5, 1.0, 2.2})
            CHECK(tau_of_distribution(g, t) ==
                  doctest::Approx(survt_product_limit(atoms, t)).epsilon(1e-12));
    }
}
