#pragma once
#include <cstdint>
#include <vector>

#include "deduct/na.hpp"

namespace deduct {

inline constexpr int kDeltaNA = -1;

/// One subject: time to administrative censoring c, observed-dropout flag
/// r_obs, enrollment covariates z, dropout-time-and-longitudinal vector w,
/// double-sampling flag s, survival outcome (x, delta).
///
/// NA rules: (x, delta) are NA exactly when r_obs=0 and s=0; w entries may be
/// NA only when r_obs=1.
struct ObservedRecord {
    double c = 0.0;
    int r_obs = 0;
    std::vector<double> z;
    std::vector<double> w;
    int s = 0;
    double x = kNA;
    int delta = kDeltaNA;  // 0, 1, or kDeltaNA
    long row_id = -1;      // source row, for error reporting

    bool has_outcome() const { return !is_na(x); }
};

/// Validated container in canonical order: the (r_obs=0, s=1) block first,
/// then (r_obs=0, s=0), then r_obs=1.
struct Dataset {
    std::vector<ObservedRecord> records;
    int z_dim = 0;
    int w_dim = 0;
    std::size_t n = 0;   // total
    std::size_t m = 0;   // observed dropouts (r_obs=0)
    std::size_t m1 = 0;  // double-sampled (r_obs=0, s=1)
};

/// Throws InvariantViolation naming the broken rule and the record's row_id.
void validate_record(const ObservedRecord& rec, int z_dim, int w_dim);

/// Stable reorder into canonical block order; validates every record and the
/// dimension declarations. Throws EmptyDataset on no records.
Dataset canonical_sort(std::vector<ObservedRecord> records, int z_dim, int w_dim);

/// True if `data.records` is already in canonical block order with matching counts.
bool is_canonical(const Dataset& data);

}  // namespace deduct
