#pragma once
#include <vector>

namespace deduct {

/// Linear-interpolation sample quantile (R type 7).
double quantile_type7(std::vector<double> values, double p);

/// Pearson correlation of the least-squares residuals of a and b on the given
/// design columns (an intercept is always included).
double partial_correlation(const std::vector<double>& a, const std::vector<double>& b,
                           const std::vector<const std::vector<double>*>& design);

}  // namespace deduct
