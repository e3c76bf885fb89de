#pragma once
#include <array>
#include <cstddef>
#include <vector>

#include "deduct/cox.hpp"
#include "deduct/distribution.hpp"
#include "deduct/logistic.hpp"
#include "deduct/lognormal.hpp"
#include "deduct/record.hpp"
#include "deduct/support.hpp"

namespace deduct {

enum class Variant { Cox, LogNormal };

struct Marginals {
    double p_robs0 = 0.0;
    double p_robs1 = 0.0;
    std::vector<double> p_zw0;  // empirical P(z, w | r_obs=0) per zw0 cell
    std::vector<double> p_zw1;
};

/// Outcome tables per stratum: row-major cells x pairs, each row summing to 1.
/// Stratum-0 pairs are the s=1 triples (support.pairs0 order); stratum-1 pairs
/// are all of sxd1.
struct CellTables {
    std::vector<double> t0;
    std::vector<double> t1;
    int fallback_cells0 = 0;  // cells served by the stratum-pooled table
    int fallback_cells1 = 0;

    double at0(std::size_t cell, std::size_t pair, std::size_t npairs) const {
        return t0[cell * npairs + pair];
    }
    double at1(std::size_t cell, std::size_t pair, std::size_t npairs) const {
        return t1[cell * npairs + pair];
    }
};

struct WorkingModelOptions {
    Variant variant = Variant::Cox;
    bool wrong_s = false;           // intercept-only selection model
    bool include_w_in_r1 = false;   // add w to the r_obs=1 regressions
    LogisticOptions logistic;
    CoxOptions cox;
    LogNormalOptions lognormal;
};

/// All fitted factors of the factorized working distribution, plus the
/// precomputed geometry needed to rebuild the outcome tables at any alpha.
/// The r_obs=0 and r_obs=1 models share no parameters.
struct WorkingModelFit {
    Variant variant = Variant::Cox;
    WorkingModelOptions options;
    Marginals marginals;
    LogisticFit selection;
    std::vector<double> p_select0;  // P(S=1 | r_obs=0, z, w) at each zw0 cell

    // Four outcome fits: {T | r0 s1}, {C | r0 s1}, {T | r1}, {C | r1}.
    std::array<CoxFit, 4> cox;
    std::array<LogNormalFit, 4> lognormal;

    double c_max0 = 0.0;  // max c over the r_obs=0 stratum
    double c_max1 = 0.0;

    // Per-stratum geometry: sorted unique support x values, and each pair's
    // (x index, x value, delta).
    std::vector<double> ux0, ux1;
    std::vector<std::size_t> pair_xidx0, pair_xidx1;
    std::vector<double> pair_x0, pair_x1;
    std::vector<int> pair_delta0, pair_delta1;

    CellTables base;                              // alpha = 0
    std::vector<double> pooled_base0, pooled_base1;
    // Log-normal path: censoring-time masses and survivors are alpha-free.
    std::vector<double> ln_pC0, ln_SC0, ln_pC1, ln_SC1;  // cells x ux
    std::vector<double> ln_muT0, ln_muT1;                 // per-cell fitted mean log T

    mutable double assemble_sum_error = 0.0;  // |sum - 1| before the exact renormalization
};

Marginals fit_empirical_marginals(const Dataset& data, const DiscretizedSupport& support);

/// Logistic model for double-sampling among r_obs=0 records, regressors (z, w)
/// or intercept-only.
LogisticFit fit_selection(const Dataset& data, bool intercept_only,
                          const LogisticOptions& opts = {});

std::array<CoxFit, 4> fit_cox_quadruple(const Dataset& data, bool include_w_in_r1,
                                        const CoxOptions& opts = {});
std::array<LogNormalFit, 4> fit_lognormal_quadruple(const Dataset& data, bool include_w_in_r1,
                                                    const LogNormalOptions& opts = {});

WorkingModelFit fit_working_models(const Dataset& data, const DiscretizedSupport& support,
                                   const WorkingModelOptions& opts);

/// Outcome tables under the one-parameter extension. alpha = 0 reproduces the
/// base tables exactly. Throws DegenerateExtension when a cell (and the pooled
/// fallback) lose all mass at this alpha.
CellTables tables_at_alpha(const WorkingModelFit& fit, const DiscretizedSupport& support,
                           double alpha);

/// Product of the four factors at every support point, renormalized exactly;
/// records |sum - 1| into fit.assemble_sum_error on the returned fit copy's
/// behalf (diagnostic only).
DiscreteDistribution assemble_distribution(const WorkingModelFit& fit,
                                           const DiscretizedSupport& support, double alpha);

}  // namespace deduct
