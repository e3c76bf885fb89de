#pragma once
#include <cstddef>
#include <string>
#include <vector>

#include "deduct/record.hpp"

namespace deduct {

/// Unique covariate tuple (z, w) within one stratum.
struct ZwKey {
    std::vector<double> z;
    std::vector<double> w;
};

/// Unique outcome triple (s, x, delta) within one stratum.
struct SxdKey {
    int s = 0;
    double x = kNA;
    int delta = kDeltaNA;
};

/// One point of the discretized support, addressed by stratum and the two
/// unique-list indices. Flat layout: the r_obs=0 block first, row-major over
/// (zw_index, sxd_index), then the r_obs=1 block; unique lists are sorted
/// (NA-first order) so the layout does not depend on input record order.
struct SupportPoint {
    int r_obs = 0;
    std::size_t zw_index = 0;
    std::size_t sxd_index = 0;
};

struct SupportDiagnostics {
    bool stratum0_empty = false;
    bool stratum1_empty = false;
    std::size_t size = 0;
    double size_to_n_ratio = 0.0;
};

/// Finite sample space: per-stratum Cartesian product of the unique (z, w)
/// tuples and unique (s, x, delta) triples observed in that stratum.
class DiscretizedSupport {
  public:
    int z_dim = 0;
    int w_dim = 0;
    std::vector<ZwKey> zw0, zw1;
    std::vector<SxdKey> sxd0, sxd1;
    /// sxd0 indices with s=1 (observed outcomes), and the single s=0 triple.
    std::vector<std::size_t> pairs0;
    std::size_t na0_index = static_cast<std::size_t>(-1);  // sxd0 index of (0, NA, NA), or -1
    SupportDiagnostics diag;

    std::size_t omega0_size() const { return zw0.size() * sxd0.size(); }
    std::size_t omega1_size() const { return zw1.size() * sxd1.size(); }
    std::size_t size() const { return omega0_size() + omega1_size(); }

    std::size_t flat_index(const SupportPoint& p) const;
    SupportPoint point_at(std::size_t flat) const;

    /// Resolves a record's (r_obs, z, w, s, x, delta) projection. Throws
    /// NotInSupport when any piece is absent from the per-stratum lists.
    std::size_t index_of(const ObservedRecord& rec) const;

    /// Lookup pieces; return npos when absent.
    std::size_t find_zw(int r_obs, const std::vector<double>& z, const std::vector<double>& w) const;
    std::size_t find_sxd(int r_obs, int s, double x, int delta) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

DiscretizedSupport build_support(const Dataset& data);

}  // namespace deduct
