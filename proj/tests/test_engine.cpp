#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "deduct/engine.hpp"
#include "deduct/errors.hpp"
#include "deduct/rng.hpp"
#include "deduct/simulation.hpp"

using namespace deduct;

TEST_CASE("perturbation is the stated mixture") {
    GenerativeConfig config{Gm::GM1, 40, 606, 0, 0.7};
    const Dataset data = generate(config);
    const auto sup = build_support(data);
    WorkingModelOptions wopts;
    const auto fit = fit_working_models(data, sup, wopts);
    const auto g = assemble_distribution(fit, sup, 0.0);
    const double eps = 1e-4;
    const std::size_t flat = sup.index_of(data.records[3]);

    const auto gp = perturb(g, flat, eps);
    CHECK(gp.probs[flat] ==
          doctest::Approx((1 - eps) * g.probs[flat] + eps).epsilon(1e-14));
    CHECK(gp.total() == doctest::Approx(1.0).epsilon(1e-12));

    SUBCASE("a point mass is a fixed point") {
        DiscreteDistribution point;
        point.support = &sup;
        point.probs.assign(sup.size(), 0.0);
        point.probs[flat] = 1.0;
        const auto moved = perturb(point, flat, eps);
        for (std::size_t i = 0; i < moved.probs.size(); ++i) {
            if (i == flat)
                CHECK(moved.probs[i] == doctest::Approx(1.0).epsilon(1e-15));
            else
                CHECK(moved.probs[i] == 0.0);
        }
    }
    SUBCASE("bad mass is rejected") {
        CHECK_THROWS_AS(perturb(g, flat, 0.0), InvariantViolation);
        CHECK_THROWS_AS(perturb(g, flat, 1.0), InvariantViolation);
    }
}

TEST_CASE("perturbation quotients of linear and quadratic functionals") {
    // Mean of x over the distribution: the quotient equals x_i - mean exactly;
    // for the squared mean the quotient error is exactly linear in epsilon.
    GenerativeConfig config{Gm::GM1, 30, 101, 0, 0.7};
    const Dataset data = generate(config);
    const auto sup = build_support(data);
    WorkingModelOptions wopts;
    const auto fit = fit_working_models(data, sup, wopts);
    const auto g = assemble_distribution(fit, sup, 0.0);

    auto mean_x = [&](const DiscreteDistribution& dist) {
        double m = 0.0;
        for (std::size_t flat = 0; flat < dist.probs.size(); ++flat) {
            const auto pt = sup.point_at(flat);
            const auto& sxd = pt.r_obs == 0 ? sup.sxd0[pt.sxd_index] : sup.sxd1[pt.sxd_index];
            if (!is_na(sxd.x)) m += dist.probs[flat] * sxd.x;
        }
        return m;
    };
    const double m0 = mean_x(g);
    for (const auto& rec : {data.records[0], data.records[data.n - 1]}) {
        const std::size_t flat = sup.index_of(rec);
        const auto pt = sup.point_at(flat);
        const auto& sxd = pt.r_obs == 0 ? sup.sxd0[pt.sxd_index] : sup.sxd1[pt.sxd_index];
        const double xi = is_na(sxd.x) ? 0.0 : sxd.x;
        const double influence = xi - m0;
        std::vector<double> errors_linear, errors_quadratic;
        for (double eps : {1e-3, 1e-4, 1e-5}) {
            const auto gp = perturb(g, flat, eps);
            const double quotient = (mean_x(gp) - m0) / eps;
            errors_linear.push_back(std::abs(quotient - influence));
            const double q2 = (mean_x(gp) * mean_x(gp) - m0 * m0) / eps;
            errors_quadratic.push_back(std::abs(q2 - 2.0 * m0 * influence));
        }
        for (std::size_t k = 0; k < errors_linear.size(); ++k) {
            const double eps = std::pow(10.0, -3.0 - k);
            CHECK(errors_linear[k] <= 10.0 * eps);  // O(eps), here ~exact
        }
        // Quadratic functional: error = eps * influence^2 exactly.
        CHECK(errors_quadratic[0] / errors_quadratic[1] == doctest::Approx(10.0).epsilon(0.05));
        CHECK(errors_quadratic[1] / errors_quadratic[2] == doctest::Approx(10.0).epsilon(0.05));
    }
}

TEST_CASE("fast evaluator agrees with the reference path") {
    for (Gm gm : {Gm::GM1, Gm::GM2}) {
        GenerativeConfig config{gm, 60, 99, 0, 0.7};
        const Dataset data = generate(config);
        const auto sup = build_support(data);
        const EngineContext ctx(data, sup);
        for (Variant variant : {Variant::Cox, Variant::LogNormal}) {
            CAPTURE(static_cast<int>(gm));
            CAPTURE(static_cast<int>(variant));
            WorkingModelOptions wopts;
            wopts.variant = variant;
            const auto fit = fit_working_models(data, sup, wopts);
            for (double alpha : {-0.5, 0.0, 0.8}) {
                const TauEvaluator eval(ctx, fit, alpha, 0.7);
                const auto g = assemble_distribution(fit, sup, alpha);
                const double tau_ref = tau_of_distribution(g, 0.7);
                CHECK(eval.tau() == doctest::Approx(tau_ref).epsilon(1e-12));

                const double eps = 1e-4;
                TauEvaluator::Scratch scratch;
                for (std::size_t i : {std::size_t{0}, data.n / 2, data.n - 1}) {
                    const auto gp = perturb(g, sup.index_of(data.records[i]), eps);
                    const double ref = (tau_of_distribution(gp, 0.7) - tau_ref) / eps;
                    CHECK(eval.gateaux_at(i, eps, scratch) ==
                          doctest::Approx(ref).epsilon(1e-8));
                }
            }
        }
    }
}

TEST_CASE("duplicated records sum to n times one quotient") {
    ObservedRecord a;
    a.c = 2.0;
    a.r_obs = 0;
    a.z = {1.0};
    a.w = {0.5};
    a.s = 1;
    a.x = 1.0;
    a.delta = 1;
    ObservedRecord b = a;
    b.z = {0.0};
    b.w = {0.6};
    b.x = 1.5;
    b.delta = 0;
    ObservedRecord c;
    c.c = 2.0;
    c.r_obs = 1;
    c.z = {0.5};
    c.w = {kNA};
    c.x = 0.7;
    c.delta = 1;
    ObservedRecord d = a;
    d.s = 0;
    d.x = kNA;
    d.delta = kDeltaNA;
    const Dataset data = canonical_sort({a, a, a, b, c, c, d}, 1, 1);
    const auto sup = build_support(data);
    WorkingModelOptions wopts;
    const auto fit = fit_working_models(data, sup, wopts);
    const EngineContext ctx(data, sup);
    const TauEvaluator eval(ctx, fit, 0.3, 0.8);
    TauEvaluator::Scratch scratch;
    const double g0 = eval.gateaux_at(0, 1e-4, scratch);
    const double g1 = eval.gateaux_at(1, 1e-4, scratch);
    const double g2 = eval.gateaux_at(2, 1e-4, scratch);
    CHECK(g0 == doctest::Approx(g1).epsilon(1e-14));
    CHECK(g0 == doctest::Approx(g2).epsilon(1e-14));
}

TEST_CASE("point-mass degenerate dataset solves at the origin") {
    // One distinct record per stratum: every cell table is a point mass, so
    // the estimating function vanishes identically and the solver reports 0.
    ObservedRecord a;
    a.c = 2.0;
    a.r_obs = 0;
    a.z = {1.0};
    a.w = {0.5};
    a.s = 1;
    a.x = 1.0;
    a.delta = 1;
    ObservedRecord b = a;
    b.s = 0;
    b.x = kNA;
    b.delta = kDeltaNA;
    ObservedRecord c;
    c.c = 2.0;
    c.r_obs = 1;
    c.z = {1.0};
    c.w = {kNA};
    c.x = 1.0;
    c.delta = 1;
    const Dataset data = canonical_sort({a, a, b, c, c}, 1, 1);
    EstimateOptions opts;
    opts.t = 0.5;
    const auto res = estimate(data, opts);
    CHECK(res.tau_hat == doctest::Approx(1.0));
    CHECK(res.solver.residual <= 1e-9);
    CHECK(std::abs(res.alpha_hat) <= 5.0);
    for (double gv : res.gateaux) CHECK(std::abs(gv) <= 1e-9);
    const double sum = std::accumulate(res.gateaux.begin(), res.gateaux.end(), 0.0);
    CHECK(sum == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
}

TEST_CASE("solved root satisfies the estimating equation") {
    GenerativeConfig config{Gm::GM1, 120, 512, 0, 0.7};
    const Dataset data = generate(config);
    EstimateOptions opts;
    const auto res = estimate(data, opts);
    CHECK_FALSE(res.solver.no_root);
    CHECK(res.solver.residual <= data.n * 1e-3);
    CHECK(!res.solver.sign_changes.empty());
    const auto sup = build_support(data);
    WorkingModelOptions wopts;
    const auto fit = fit_working_models(data, sup, wopts);
    CHECK(sum_gateaux(fit, sup, data, res.alpha_hat, opts.epsilon, opts.t) ==
          doctest::Approx(0.0).scale(1.0).epsilon(data.n * 1e-3));
    SUBCASE("per-subject values match the per-record entry point") {
        const double g0 = gateaux(fit, sup, data, res.alpha_hat, data.records[5], opts.epsilon,
                                  opts.t);
        CHECK(g0 == doctest::Approx(res.gateaux[5]).epsilon(1e-10));
    }
}

TEST_CASE("standard error is invariant to subject order") {
    GenerativeConfig config{Gm::GM1, 80, 333, 0, 0.7};
    const Dataset data = generate(config);
    std::vector<ObservedRecord> shuffled = data.records;
    std::mt19937 prng(3);
    std::shuffle(shuffled.begin(), shuffled.end(), prng);
    const Dataset data2 = canonical_sort(std::move(shuffled), 1, 1);
    EstimateOptions opts;
    const auto r1 = estimate(data, opts);
    const auto r2 = estimate(data2, opts);
    // Fits and the root search tolerate reorderings only up to their own
    // solver tolerances.
    CHECK(r1.tau_hat == doctest::Approx(r2.tau_hat).epsilon(1e-6));
    CHECK(r1.se == doctest::Approx(r2.se).epsilon(1e-5));
}

TEST_CASE("alpha-zero mode reports the unextended value") {
    GenerativeConfig config{Gm::GM1, 90, 21, 0, 0.7};
    const Dataset data = generate(config);
    EstimateOptions opts;
    opts.alpha_zero = true;
    const auto res = estimate(data, opts);
    CHECK(res.alpha_hat == 0.0);
    CHECK(res.tau_hat == res.tau_alpha0);
    CHECK(res.se > 0.0);
}

TEST_CASE("estimation requires both strata and a double-sample") {
    ObservedRecord c;
    c.c = 2.0;
    c.r_obs = 1;
    c.z = {1.0};
    c.w = {kNA};
    c.x = 1.0;
    c.delta = 1;
    const Dataset data = canonical_sort({c, c, c}, 1, 1);
    EstimateOptions opts;
    CHECK_THROWS_AS(estimate(data, opts), EmptyStratum);
}

TEST_CASE("gateaux loop is deterministic under any worker count") {
    GenerativeConfig config{Gm::GM1, 100, 4040, 0, 0.7};
    const Dataset data = generate(config);
    const auto sup = build_support(data);
    WorkingModelOptions wopts;
    const auto fit = fit_working_models(data, sup, wopts);
    const EngineContext ctx(data, sup);
    const TauEvaluator eval(ctx, fit, 0.2, 0.7);
    const auto serial = eval.gateaux_all(1e-4, 1);
    const auto parallel = eval.gateaux_all(1e-4, 4);
    CHECK(serial == parallel);
}
