// Test-only reference implementations, independent of the library's
// computation paths: exact rational product-limit, brute-force component
// sums over materialized support tuples, and grid-search likelihood
// maximizers for the low-dimensional fits.
#pragma once
#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "deduct/distribution.hpp"
#include "deduct/estimand.hpp"

namespace oracles {

/// Exact rational arithmetic product-limit. Atom masses are fractions
/// num/den; the result is reduced with gcd at every step so int64 terms stay
/// small for the instance sizes used in tests (<= 6 atoms, small denominators).
struct RationalAtom {
    std::int64_t x_times_4;  // times on a quarter-integer grid keep ties exact
    int delta;
    std::int64_t num;
    std::int64_t den;
};
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};
Rational rational_product_limit(std::vector<RationalAtom> atoms, std::int64_t t_times_4);

/// One materialized support tuple with its probability.
struct MassPoint {
    int r_obs;
    std::vector<double> z, w;
    int s;
    double x;
    int delta;
    double prob;
};
std::vector<MassPoint> materialize(const deduct::DiscreteDistribution& g);

/// The six component families computed by naive indicator sums over the
/// materialized tuples (0/0 := 0).
struct BruteComponents {
    double p_robs1;
    double p_robs0;
    // keyed by value, matched with na-aware equality
    std::vector<std::pair<std::vector<double>, double>> p_z1;
    std::function<double(const std::vector<double>& z, double x, int delta)> xdelta_given_z1;
    std::vector<std::pair<std::pair<std::vector<double>, std::vector<double>>, double>> p_zw0;
    std::function<double(const std::vector<double>& z, const std::vector<double>& w, double x,
                         int delta)>
        xdelta_given_zw0_s1;
};
BruteComponents brute_components(const deduct::DiscreteDistribution& g);

/// Exhaustive evaluation of the survival functional from the brute components:
/// sum over unique z of pr(z) * product-limit(mixture table).
double brute_tau(const deduct::DiscreteDistribution& g, double t);

/// Grid-search maximizers (multi-round zoom). Bounds are generous; the
/// returned point maximizes the same likelihoods the fitters climb.
std::vector<double> grid_maximize(const std::function<double(const std::vector<double>&)>& f,
                                  std::vector<std::pair<double, double>> bounds, int points,
                                  int rounds);

double logistic_loglik(const std::vector<std::vector<double>>& covars, const std::vector<int>& y,
                       const std::vector<double>& beta);
double cox_partial_loglik(const std::vector<double>& x, const std::vector<int>& ev,
                          const std::vector<double>& covar, double beta);
double lognormal_loglik(const std::vector<double>& x, const std::vector<int>& ev,
                        const std::vector<double>& covar, double b0, double b1, double sigma);

}  // namespace oracles
