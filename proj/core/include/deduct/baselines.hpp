#pragma once
#include <cstdint>

#include "deduct/record.hpp"

namespace deduct {

struct KmResult {
    double estimate = 1.0;
    double se = 0.0;      // Greenwood (complete-case) or bootstrap sd (stratified)
    double ci_lo = 0.0;
    double ci_hi = 1.0;
};

/// Kaplan-Meier on the pooled complete cases (r_obs=1 or s=1), Greenwood
/// standard error, normal-approximation interval. Throws NoCompleteCases.
KmResult km_complete_case(const Dataset& data, double t);

/// Weighted average of the per-stratum Kaplan-Meier curves with weights
/// P(r_obs); percentile bootstrap interval over whole-dataset resamples.
/// Throws EmptyStratum when a stratum has no complete cases.
KmResult km_stratified(const Dataset& data, double t, int n_boot, std::uint64_t seed,
                       std::uint64_t stream = 0);

}  // namespace deduct
