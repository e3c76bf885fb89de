#pragma once
#include <vector>

namespace deduct {

/// Accelerated-failure-time fit: log(time) = intercept + covars . slopes +
/// sigma * N(0,1), maximized over the censored likelihood (density term for
/// events, survivor term for censored observations).
struct LogNormalFit {
    double intercept = 0.0;
    std::vector<double> slopes;
    double sigma = 1.0;
    bool converged = false;
    int iterations = 0;
    double loglik = 0.0;

    double mean_log(const std::vector<double>& covars) const;
};

struct LogNormalOptions {
    double rel_tol = 1e-10;  // relative log-likelihood change
    int max_iterations = 200;
};

/// Throws ZeroVariance when every observation is an event at the same fitted
/// log-time (sigma would collapse to 0), NonConvergence otherwise on failure.
LogNormalFit fit_lognormal(const std::vector<double>& times, const std::vector<int>& events,
                           const std::vector<std::vector<double>>& covars,
                           const LogNormalOptions& opts = {});

/// Standard normal CDF and survivor, accurate in the far tails.
double norm_cdf(double r);
double norm_sf(double r);

}  // namespace deduct
