#include "deduct/lognormal.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "deduct/errors.hpp"

namespace deduct {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kLogSqrt2Pi = 0.9189385332046727;

// Asymptotic series for the right-tail Mills ratio, used past the erfc range.
double tail_series(double r) {
    const double r2 = r * r;
    return 1.0 - 1.0 / r2 + 3.0 / (r2 * r2) - 15.0 / (r2 * r2 * r2) +
           105.0 / (r2 * r2 * r2 * r2);
}

double log_norm_sf(double r) {
    if (r <= 20.0) return std::log(0.5 * std::erfc(r / kSqrt2));
    return -0.5 * r * r - kLogSqrt2Pi - std::log(r) + std::log(tail_series(r));
}

// phi(r) / Phi(-r)
double mills(double r) {
    if (r <= 20.0) {
        const double sf = 0.5 * std::erfc(r / kSqrt2);
        return std::exp(-0.5 * r * r - kLogSqrt2Pi) / sf;
    }
    return r / tail_series(r);
}

}  // namespace

double norm_cdf(double r) { return 0.5 * std::erfc(-r / kSqrt2); }
double norm_sf(double r) { return 0.5 * std::erfc(r / kSqrt2); }

double LogNormalFit::mean_log(const std::vector<double>& covars) const {
    double mu = intercept;
    for (std::size_t j = 0; j < covars.size(); ++j) mu += slopes[j] * covars[j];
    return mu;
}

LogNormalFit fit_lognormal(const std::vector<double>& times, const std::vector<int>& events,
                           const std::vector<std::vector<double>>& covars,
                           const LogNormalOptions& opts) {
    const std::size_t n = times.size();
    if (n == 0) throw InvariantViolation("log-normal fit needs observations");
    const std::size_t p = covars.empty() ? 0 : covars[0].size();
    std::size_t n_events = 0;
    for (int e : events) n_events += e != 0;
    if (n_events == 0)
        throw NonConvergence("log-normal likelihood has no events; location is unbounded");

    Eigen::MatrixXd X(n, p + 1);
    Eigen::VectorXd lx(n);
    for (std::size_t i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        for (std::size_t j = 0; j < p; ++j) X(i, j + 1) = covars[i][j];
        lx(i) = std::log(times[i]);
    }
    if (n_events == n) {
        double lo = lx.minCoeff(), hi = lx.maxCoeff();
        if (lo == hi)
            throw ZeroVariance("all observations are events at one time; sigma degenerates");
    }

    // theta = (beta, log sigma)
    Eigen::VectorXd beta = (X.transpose() * X).ldlt().solve(X.transpose() * lx);
    double ls = std::log(std::max(std::sqrt((lx - X * beta).squaredNorm() / n), 0.1));

    auto eval = [&](const Eigen::VectorXd& b, double logsig, Eigen::VectorXd* grad,
                    Eigen::MatrixXd* hess) {
        const double sig = std::exp(logsig);
        double ll = 0.0;
        if (grad) grad->setZero();
        if (hess) hess->setZero();
        Eigen::VectorXd xrow(p + 2);
        for (std::size_t i = 0; i < n; ++i) {
            const double r = (lx(i) - X.row(i).dot(b)) / sig;
            double dmu, dls, dmumu, dmuls, dlsls;
            if (events[i]) {
                ll += -0.5 * r * r - kLogSqrt2Pi - logsig - lx(i);
                dmu = r / sig;
                dls = r * r - 1.0;
                dmumu = -1.0 / (sig * sig);
                dmuls = -2.0 * r / sig;
                dlsls = -2.0 * r * r;
            } else {
                const double lam = mills(r);
                ll += log_norm_sf(r);
                dmu = lam / sig;
                dls = lam * r;
                dmumu = -lam * (lam - r) / (sig * sig);
                dmuls = -lam * ((lam - r) * r + 1.0) / sig;
                dlsls = -lam * r * r * (lam - r) - lam * r;
            }
            if (grad) {
                for (std::size_t j = 0; j <= p; ++j) (*grad)(j) += dmu * X(i, j);
                (*grad)(p + 1) += dls;
            }
            if (hess) {
                for (std::size_t j = 0; j <= p; ++j) {
                    for (std::size_t k = 0; k <= p; ++k) (*hess)(j, k) += dmumu * X(i, j) * X(i, k);
                    (*hess)(j, p + 1) += dmuls * X(i, j);
                    (*hess)(p + 1, j) += dmuls * X(i, j);
                }
                (*hess)(p + 1, p + 1) += dlsls;
            }
        }
        return ll;
    };

    LogNormalFit fit;
    Eigen::VectorXd grad(p + 2);
    Eigen::MatrixXd hess(p + 2, p + 2);
    double ll = eval(beta, ls, &grad, &hess);
    bool done = false;
    for (int it = 0; it < opts.max_iterations && !done; ++it) {
        fit.iterations = it + 1;
        Eigen::VectorXd step = (-hess).ldlt().solve(grad);
        double scale = 1.0;
        double new_ll = ll;
        Eigen::VectorXd nb = beta;
        double nls = ls;
        for (int half = 0; half < 40; ++half) {
            nb = beta + scale * step.head(p + 1);
            nls = std::clamp(ls + scale * step(p + 1), std::log(1e-3), std::log(1e3));
            new_ll = eval(nb, nls, nullptr, nullptr);
            if (std::isfinite(new_ll) && new_ll >= ll - 1e-13) break;
            scale *= 0.5;
        }
        if (std::abs(new_ll - ll) <= opts.rel_tol * (std::abs(ll) + 1.0)) done = true;
        beta = nb;
        ls = nls;
        ll = eval(beta, ls, &grad, &hess);
    }
    if (!done)
        throw NonConvergence("log-normal likelihood did not stabilize after " +
                             std::to_string(fit.iterations) + " iterations");
    fit.converged = true;
    fit.intercept = beta(0);
    fit.slopes.assign(beta.data() + 1, beta.data() + 1 + p);
    fit.sigma = std::exp(ls);
    fit.loglik = ll;
    return fit;
}

}  // namespace deduct
