#include "deduct/support.hpp"

#include <algorithm>

#include "deduct/errors.hpp"

namespace deduct {

namespace {

bool zw_less(const ZwKey& a, const ZwKey& b) {
    if (na_less(a.z, b.z)) return true;
    if (na_less(b.z, a.z)) return false;
    return na_less(a.w, b.w);
}

bool zw_equal(const ZwKey& a, const ZwKey& b) {
    return na_equal(a.z, b.z) && na_equal(a.w, b.w);
}

bool sxd_less(const SxdKey& a, const SxdKey& b) {
    if (a.s != b.s) return a.s < b.s;
    if (na_less(a.x, b.x)) return true;
    if (na_less(b.x, a.x)) return false;
    return a.delta < b.delta;
}

bool sxd_equal(const SxdKey& a, const SxdKey& b) {
    return a.s == b.s && na_equal(a.x, b.x) && a.delta == b.delta;
}

template <typename T, typename Less, typename Eq>
void sort_unique(std::vector<T>& v, Less less, Eq eq) {
    std::sort(v.begin(), v.end(), less);
    v.erase(std::unique(v.begin(), v.end(), eq), v.end());
}

template <typename T, typename Less, typename Eq>
std::size_t find_sorted(const std::vector<T>& v, const T& key, Less less, Eq eq) {
    auto it = std::lower_bound(v.begin(), v.end(), key, less);
    if (it != v.end() && eq(*it, key)) return static_cast<std::size_t>(it - v.begin());
    return DiscretizedSupport::npos;
}

}  // namespace

DiscretizedSupport build_support(const Dataset& data) {
    DiscretizedSupport sup;
    sup.z_dim = data.z_dim;
    sup.w_dim = data.w_dim;
    for (const auto& rec : data.records) {
        auto& zw = rec.r_obs == 0 ? sup.zw0 : sup.zw1;
        auto& sxd = rec.r_obs == 0 ? sup.sxd0 : sup.sxd1;
        zw.push_back({rec.z, rec.w});
        sxd.push_back({rec.s, rec.x, rec.delta});
    }
    sort_unique(sup.zw0, zw_less, zw_equal);
    sort_unique(sup.zw1, zw_less, zw_equal);
    sort_unique(sup.sxd0, sxd_less, sxd_equal);
    sort_unique(sup.sxd1, sxd_less, sxd_equal);
    for (std::size_t k = 0; k < sup.sxd0.size(); ++k) {
        if (sup.sxd0[k].s == 1)
            sup.pairs0.push_back(k);
        else
            sup.na0_index = k;
    }
    sup.diag.stratum0_empty = sup.zw0.empty();
    sup.diag.stratum1_empty = sup.zw1.empty();
    sup.diag.size = sup.size();
    sup.diag.size_to_n_ratio =
        data.n == 0 ? 0.0 : static_cast<double>(sup.size()) / static_cast<double>(data.n);
    return sup;
}

std::size_t DiscretizedSupport::flat_index(const SupportPoint& p) const {
    if (p.r_obs == 0) return p.zw_index * sxd0.size() + p.sxd_index;
    return omega0_size() + p.zw_index * sxd1.size() + p.sxd_index;
}

SupportPoint DiscretizedSupport::point_at(std::size_t flat) const {
    SupportPoint p;
    if (flat < omega0_size()) {
        p.r_obs = 0;
        p.zw_index = flat / sxd0.size();
        p.sxd_index = flat % sxd0.size();
    } else {
        flat -= omega0_size();
        p.r_obs = 1;
        p.zw_index = flat / sxd1.size();
        p.sxd_index = flat % sxd1.size();
    }
    return p;
}

std::size_t DiscretizedSupport::find_zw(int r_obs, const std::vector<double>& z,
                                        const std::vector<double>& w) const {
    const auto& list = r_obs == 0 ? zw0 : zw1;
    return find_sorted(list, ZwKey{z, w}, zw_less, zw_equal);
}

std::size_t DiscretizedSupport::find_sxd(int r_obs, int s, double x, int delta) const {
    const auto& list = r_obs == 0 ? sxd0 : sxd1;
    return find_sorted(list, SxdKey{s, x, delta}, sxd_less, sxd_equal);
}

std::size_t DiscretizedSupport::index_of(const ObservedRecord& rec) const {
    const std::size_t zi = find_zw(rec.r_obs, rec.z, rec.w);
    const std::size_t si = find_sxd(rec.r_obs, rec.s, rec.x, rec.delta);
    if (zi == npos || si == npos)
        throw NotInSupport("record (row " + std::to_string(rec.row_id) +
                           ") is not a point of the discretized support");
    return flat_index({rec.r_obs, zi, si});
}

}  // namespace deduct
