#include <doctest.h>

#include <cmath>

#include "deduct/errors.hpp"
#include "deduct/logistic.hpp"
#include "deduct/rng.hpp"
#include "oracles.hpp"

using namespace deduct;

TEST_CASE("intercept-only fit equals the sample mean on the probability scale") {
    const std::vector<std::vector<double>> covars(4);
    const std::vector<int> y = {1, 1, 1, 0};
    const auto fit = fit_logistic(covars, y);
    CHECK(fit.converged);
    CHECK(fit.predict({}) == doctest::Approx(0.75).epsilon(1e-10));
}

TEST_CASE("perfect separation is detected and clamped") {
    std::vector<std::vector<double>> covars;
    std::vector<int> y;
    for (int i = 0; i < 10; ++i) {
        covars.push_back({static_cast<double>(i)});
        y.push_back(i >= 5 ? 1 : 0);
    }
    const auto fit = fit_logistic(covars, y);
    CHECK(fit.separation);
    CHECK_FALSE(fit.converged);
    for (double b : fit.coef) CHECK(std::isfinite(b));
    const double p = fit.predict({100.0});
    CHECK(p > 0.0);
    CHECK(p < 1.0);
}

TEST_CASE("constant response is degenerate") {
    const std::vector<std::vector<double>> covars(3);
    CHECK_THROWS_AS(fit_logistic(covars, {1, 1, 1}), DegenerateSelection);
}

TEST_CASE("coefficients match the grid-search likelihood maximizer") {
    RngStream rng(31, 0);
    std::vector<std::vector<double>> covars;
    std::vector<int> y;
    for (int i = 0; i < 20; ++i) {
        const double z = rng.uniform(-2.0, 2.0);
        covars.push_back({z});
        y.push_back(rng.bernoulli(expit(0.4 + 0.9 * z)) ? 1 : 0);
    }
    const auto fit = fit_logistic(covars, y);
    REQUIRE(fit.converged);
    const auto best = oracles::grid_maximize(
        [&](const std::vector<double>& b) { return oracles::logistic_loglik(covars, y, b); },
        {{-5.0, 5.0}, {-5.0, 5.0}}, 41, 6);
    CHECK(fit.coef[0] == doctest::Approx(best[0]).epsilon(1e-4));
    CHECK(fit.coef[1] == doctest::Approx(best[1]).epsilon(1e-4));
}
