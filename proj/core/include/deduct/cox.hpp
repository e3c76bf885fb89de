#pragma once
#include <vector>

namespace deduct {

/// Proportional-hazards fit: partial-likelihood coefficients (Breslow tie
/// handling) plus the Breslow baseline cumulative hazard, stored as a step
/// function at the unique observed times. Covariates are centered internally;
/// `survival_at` undoes the centering.
struct CoxFit {
    std::vector<double> coef;
    std::vector<double> baseline_x;       // unique times, ascending
    std::vector<double> baseline_cumhaz;  // cumulative hazard at each time
    std::vector<double> covar_means;
    bool all_censored = false;  // no events: coef = 0, hazard = 0, S = 1
    bool converged = false;
    int iterations = 0;
    double final_grad_norm = 0.0;

    double cumhaz_at(double x) const;
    /// S(x | covars) = exp(-Lambda0(x) * exp((covars - means) . coef)).
    double survival_at(double x, const std::vector<double>& covars) const;
};

struct CoxOptions {
    double grad_tol = 1e-8;
    int max_iterations = 100;
};

/// times/events aligned; covars row-major n x p (p may be 0, in which case the
/// baseline is the Nelson-Aalen cumulative hazard). Throws NonConvergence when
/// the gradient stays above tolerance after max_iterations.
CoxFit fit_cox(const std::vector<double>& times, const std::vector<int>& events,
               const std::vector<std::vector<double>>& covars, const CoxOptions& opts = {});

}  // namespace deduct
