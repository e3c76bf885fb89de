#pragma once
#include <cstddef>
#include <vector>

#include "deduct/distribution.hpp"

namespace deduct {

/// One atom of a discrete outcome law: mass at (x, delta).
struct OutcomeAtom {
    double x = 0.0;
    int delta = 0;
    double mass = 0.0;
};

/// Distribution components induced by a table on the support: the stratum
/// shares, covariate marginals per stratum, and the conditional outcome
/// tables (stratum 0 conditions on s=1). 0/0 is taken as 0 throughout.
struct ComponentSet {
    const DiscretizedSupport* support = nullptr;
    double p_robs1 = 0.0;
    double p_robs0 = 0.0;

    /// Unique z values of the r_obs=1 stratum with P(z | r_obs=1).
    std::vector<std::vector<double>> z1_values;
    std::vector<double> p_z1;
    /// Conditional outcome tables per z1 value: row-major over sxd1 pairs.
    std::vector<double> xdelta_given_z1;

    /// P(z, w | r_obs=0) per zw0 cell and the conditional outcome table per
    /// cell (row-major over the stratum's s=1 pairs).
    std::vector<double> p_zw0;
    std::vector<double> xdelta_given_zw0;

    /// zw0 cell -> index into the merged unique-z list shared with z1_values.
    std::vector<std::size_t> z_of_zw0;
    std::vector<std::size_t> z_of_z1;
    /// Merged unique z list across both strata.
    std::vector<std::vector<double>> z_values;
};

ComponentSet components_from_distribution(const DiscreteDistribution& g);

/// Mixture of the two strata's outcome laws at one merged z value, normalized
/// over (x, delta); also returns the z marginal pr(z) via out parameter.
std::vector<OutcomeAtom> marginal_xdelta_given_z(const ComponentSet& comp, std::size_t z_index,
                                                 double* pr_z = nullptr);

enum class SurvFunctional { ProductLimit, NelsonAalen };

/// Survival beyond t of a weighted discrete (x, delta) law under independent
/// survival and censoring: the product-limit over event atoms, with events
/// processed before censorings at tied x. If the at-risk mass is exhausted the
/// last value is carried. Atoms need not be sorted or unique.
double survt_product_limit(std::vector<OutcomeAtom> atoms, double t,
                           SurvFunctional functional = SurvFunctional::ProductLimit);

/// The survival functional: sum over merged z values of pr(z) times the
/// product-limit of the per-z outcome mixture. Zero-marginal z values are
/// skipped.
double tau_of_distribution(const DiscreteDistribution& g, double t,
                           SurvFunctional functional = SurvFunctional::ProductLimit);

}  // namespace deduct
