#pragma once
#include <cmath>
#include <limits>
#include <vector>

namespace deduct {

inline constexpr const char* kVersion = "0.1.0";

/// Missing value marker for real-valued fields.
inline constexpr double kNA = std::numeric_limits<double>::quiet_NaN();

inline bool is_na(double v) { return std::isnan(v); }

/// Equality where NA == NA (otherwise exact double equality).
inline bool na_equal(double a, double b) {
    if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
    return a == b;
}

/// Strict weak order with NA sorting before every number (and equal to itself).
inline bool na_less(double a, double b) {
    if (std::isnan(a)) return !std::isnan(b);
    if (std::isnan(b)) return false;
    return a < b;
}

inline bool na_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!na_equal(a[i], b[i])) return false;
    return true;
}

inline bool na_less(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size() < b.size() ? a.size() : b.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (na_less(a[i], b[i])) return true;
        if (na_less(b[i], a[i])) return false;
    }
    return a.size() < b.size();
}

}  // namespace deduct
