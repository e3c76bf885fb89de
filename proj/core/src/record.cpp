#include "deduct/record.hpp"

#include <algorithm>
#include <string>

#include "deduct/errors.hpp"

namespace deduct {

namespace {

[[noreturn]] void fail(const ObservedRecord& rec, const std::string& what) {
    throw InvariantViolation("record (row " + std::to_string(rec.row_id) + "): " + what);
}

}  // namespace

void validate_record(const ObservedRecord& rec, int z_dim, int w_dim) {
    if (!(rec.c > 0.0) || !std::isfinite(rec.c)) fail(rec, "c must be a positive real");
    if (rec.r_obs != 0 && rec.r_obs != 1) fail(rec, "r_obs must be 0 or 1");
    if (rec.s != 0 && rec.s != 1) fail(rec, "s must be 0 or 1");
    if (rec.r_obs == 1 && rec.s == 1) fail(rec, "s=1 requires r_obs=0");
    if (static_cast<int>(rec.z.size()) != z_dim) fail(rec, "z has wrong dimension");
    if (static_cast<int>(rec.w.size()) != w_dim) fail(rec, "w has wrong dimension");
    for (double v : rec.z)
        if (!std::isfinite(v)) fail(rec, "z entries must be finite (NA not allowed)");
    for (double v : rec.w) {
        if (is_na(v)) {
            if (rec.r_obs == 0) fail(rec, "w may be NA only when r_obs=1");
        } else if (!std::isfinite(v)) {
            fail(rec, "w entries must be finite or NA");
        }
    }
    const bool x_na = is_na(rec.x);
    const bool d_na = rec.delta == kDeltaNA;
    if (x_na != d_na) fail(rec, "x and delta must be NA jointly or not at all");
    const bool outcome_missing = rec.r_obs == 0 && rec.s == 0;
    if (outcome_missing && !x_na) fail(rec, "(x, delta) must be NA when r_obs=0 and s=0");
    if (!outcome_missing && x_na) fail(rec, "(x, delta) must be observed unless r_obs=0 and s=0");
    if (!x_na) {
        if (!(rec.x > 0.0) || !std::isfinite(rec.x)) fail(rec, "x must be a positive real");
        if (rec.x > rec.c) fail(rec, "x must satisfy x <= c");
        if (rec.delta != 0 && rec.delta != 1) fail(rec, "delta must be 0 or 1 when observed");
    }
}

Dataset canonical_sort(std::vector<ObservedRecord> records, int z_dim, int w_dim) {
    if (records.empty()) throw EmptyDataset("dataset has no records");
    for (const auto& rec : records) validate_record(rec, z_dim, w_dim);
    auto block = [](const ObservedRecord& r) {
        if (r.r_obs == 0 && r.s == 1) return 0;
        if (r.r_obs == 0) return 1;
        return 2;
    };
    std::stable_sort(records.begin(), records.end(),
                     [&](const ObservedRecord& a, const ObservedRecord& b) {
                         return block(a) < block(b);
                     });
    Dataset out;
    out.z_dim = z_dim;
    out.w_dim = w_dim;
    out.n = records.size();
    for (const auto& rec : records) {
        if (rec.r_obs == 0) {
            ++out.m;
            if (rec.s == 1) ++out.m1;
        }
    }
    out.records = std::move(records);
    return out;
}

bool is_canonical(const Dataset& data) {
    if (data.records.size() != data.n) return false;
    std::size_t m = 0, m1 = 0;
    int prev = -1;
    for (const auto& rec : data.records) {
        const int blk = rec.r_obs == 1 ? 2 : (rec.s == 1 ? 0 : 1);
        if (blk < prev) return false;
        prev = blk;
        if (rec.r_obs == 0) {
            ++m;
            if (rec.s == 1) ++m1;
        }
    }
    return m == data.m && m1 == data.m1;
}

}  // namespace deduct
