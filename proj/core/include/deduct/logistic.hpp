#pragma once
#include <vector>

namespace deduct {

/// Logistic regression fit (intercept first). Fitted by iteratively
/// reweighted least squares; `separation` flags diverging coefficients,
/// in which case the fit is clamped at the last iterate.
struct LogisticFit {
    std::vector<double> coef;  // intercept, then one slope per covariate column
    bool converged = false;
    bool separation = false;
    int iterations = 0;

    /// expit(intercept + covars . slopes), clamped into (0, 1).
    double predict(const std::vector<double>& covars) const;
};

struct LogisticOptions {
    double grad_tol = 1e-8;
    int max_iterations = 100;
};

/// covars: row-major n x p matrix (no intercept column; p may be 0 for an
/// intercept-only model). Throws DegenerateSelection when all y are equal.
LogisticFit fit_logistic(const std::vector<std::vector<double>>& covars,
                         const std::vector<int>& y, const LogisticOptions& opts = {});

double expit(double eta);

}  // namespace deduct
