#include "deduct/stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace deduct {

double quantile_type7(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    const double pos = p * (values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - lo) * (values[hi] - values[lo]);
}

double partial_correlation(const std::vector<double>& a, const std::vector<double>& b,
                           const std::vector<const std::vector<double>*>& design) {
    const std::size_t n = a.size();
    const std::size_t p = design.size() + 1;
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd va(n), vb(n);
    for (std::size_t i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        for (std::size_t j = 0; j < design.size(); ++j) X(i, j + 1) = (*design[j])[i];
        va(i) = a[i];
        vb(i) = b[i];
    }
    const Eigen::MatrixXd XtX = X.transpose() * X;
    const Eigen::VectorXd ra = va - X * XtX.ldlt().solve(X.transpose() * va);
    const Eigen::VectorXd rb = vb - X * XtX.ldlt().solve(X.transpose() * vb);
    return ra.dot(rb) / std::sqrt(ra.squaredNorm() * rb.squaredNorm());
}

}  // namespace deduct
