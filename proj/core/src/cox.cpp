#include "deduct/cox.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "deduct/errors.hpp"

namespace deduct {

double CoxFit::cumhaz_at(double x) const {
    auto it = std::upper_bound(baseline_x.begin(), baseline_x.end(), x);
    if (it == baseline_x.begin()) return 0.0;
    return baseline_cumhaz[static_cast<std::size_t>(it - baseline_x.begin()) - 1];
}

double CoxFit::survival_at(double x, const std::vector<double>& covars) const {
    double eta = 0.0;
    for (std::size_t j = 0; j < coef.size(); ++j) eta += (covars[j] - covar_means[j]) * coef[j];
    return std::exp(-cumhaz_at(x) * std::exp(eta));
}

namespace {

struct PartialLik {
    // Sorted copies.
    std::vector<double> xs;
    std::vector<int> evs;
    Eigen::MatrixXd Z;  // centered covariates, sorted
    std::size_t n;
    Eigen::Index p;

    // loglik, gradient, Hessian of the Breslow partial likelihood.
    double eval(const Eigen::VectorXd& beta, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const {
        Eigen::VectorXd w(n);
        for (std::size_t i = 0; i < n; ++i) w(i) = std::exp(Z.row(i).dot(beta));
        // Suffix sums over the risk set {j : x_j >= x_i}.
        std::vector<double> S0(n + 1, 0.0);
        Eigen::MatrixXd S1 = Eigen::MatrixXd::Zero(n + 1, p);
        std::vector<Eigen::MatrixXd> S2;
        if (hess) S2.assign(n + 1, Eigen::MatrixXd::Zero(p, p));
        for (std::size_t i = n; i-- > 0;) {
            S0[i] = S0[i + 1] + w(i);
            if (p > 0) S1.row(i) = S1.row(i + 1) + w(i) * Z.row(i);
            if (hess) S2[i] = S2[i + 1] + w(i) * (Z.row(i).transpose() * Z.row(i));
        }
        double ll = 0.0;
        if (grad) grad->setZero();
        if (hess) hess->setZero();
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            double d = 0.0;
            Eigen::VectorXd zsum = Eigen::VectorXd::Zero(p);
            while (j < n && xs[j] == xs[i]) {
                if (evs[j]) {
                    d += 1.0;
                    if (p > 0) zsum += Z.row(j).transpose();
                }
                ++j;
            }
            if (d > 0.0) {
                ll += zsum.dot(beta) - d * std::log(S0[i]);
                if (grad) *grad += zsum - d * (S1.row(i).transpose() / S0[i]);
                if (hess) {
                    Eigen::VectorXd mean = S1.row(i).transpose() / S0[i];
                    *hess += d * (S2[i] / S0[i] - mean * mean.transpose());
                }
            }
            i = j;
        }
        return ll;
    }
};

}  // namespace

CoxFit fit_cox(const std::vector<double>& times, const std::vector<int>& events,
               const std::vector<std::vector<double>>& covars, const CoxOptions& opts) {
    const std::size_t n = times.size();
    if (n == 0) throw InvariantViolation("proportional-hazards fit needs observations");
    const std::size_t p = covars.empty() ? 0 : covars[0].size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

    CoxFit fit;
    fit.covar_means.assign(p, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) fit.covar_means[j] += covars[i][j];
    for (std::size_t j = 0; j < p; ++j) fit.covar_means[j] /= static_cast<double>(n);

    PartialLik lik;
    lik.n = n;
    lik.p = static_cast<Eigen::Index>(p);
    lik.xs.resize(n);
    lik.evs.resize(n);
    lik.Z.resize(n, p);
    std::size_t n_events = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = order[k];
        lik.xs[k] = times[i];
        lik.evs[k] = events[i];
        n_events += events[i] != 0;
        for (std::size_t j = 0; j < p; ++j) lik.Z(k, j) = covars[i][j] - fit.covar_means[j];
    }

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    if (n_events == 0) {
        fit.all_censored = true;
        fit.converged = true;
    } else if (p > 0) {
        Eigen::VectorXd grad(p);
        Eigen::MatrixXd hess(p, p);
        double ll = lik.eval(beta, &grad, &hess);
        for (int it = 0; it < opts.max_iterations; ++it) {
            fit.iterations = it + 1;
            fit.final_grad_norm = grad.lpNorm<Eigen::Infinity>();
            if (fit.final_grad_norm < opts.grad_tol) {
                fit.converged = true;
                break;
            }
            Eigen::VectorXd step = hess.ldlt().solve(grad);
            double scale = 1.0;
            for (int half = 0; half < 30; ++half) {
                Eigen::VectorXd cand = beta + scale * step;
                const double cand_ll = lik.eval(cand, nullptr, nullptr);
                if (cand_ll >= ll - 1e-12 || !std::isfinite(ll)) {
                    beta = cand;
                    ll = cand_ll;
                    break;
                }
                scale *= 0.5;
            }
            ll = lik.eval(beta, &grad, &hess);
        }
        if (!fit.converged)
            throw NonConvergence("partial-likelihood gradient norm " +
                                 std::to_string(fit.final_grad_norm) + " after " +
                                 std::to_string(fit.iterations) + " iterations");
    } else {
        fit.converged = true;
    }
    fit.coef.assign(beta.data(), beta.data() + beta.size());

    // Breslow baseline at the unique sorted times.
    Eigen::VectorXd w(n);
    for (std::size_t i = 0; i < n; ++i) w(i) = std::exp(lik.Z.row(i).dot(beta));
    std::vector<double> S0(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) S0[i] = S0[i + 1] + w(i);
    double cum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        double d = 0.0;
        while (j < n && lik.xs[j] == lik.xs[i]) d += lik.evs[j++] != 0;
        if (d > 0.0) cum += d / S0[i];
        fit.baseline_x.push_back(lik.xs[i]);
        fit.baseline_cumhaz.push_back(cum);
        i = j;
    }
    return fit;
}

}  // namespace deduct
