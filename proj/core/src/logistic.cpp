#include "deduct/logistic.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "deduct/errors.hpp"

namespace deduct {

double expit(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

namespace {
constexpr double kProbFloor = 1e-15;

double clamp_prob(double p) {
    if (p < kProbFloor) return kProbFloor;
    if (p > 1.0 - kProbFloor) return 1.0 - kProbFloor;
    return p;
}
}  // namespace

double LogisticFit::predict(const std::vector<double>& covars) const {
    double eta = coef.at(0);
    for (std::size_t j = 0; j < covars.size(); ++j) eta += coef.at(j + 1) * covars[j];
    return clamp_prob(expit(eta));
}

LogisticFit fit_logistic(const std::vector<std::vector<double>>& covars,
                         const std::vector<int>& y, const LogisticOptions& opts) {
    const std::size_t n = y.size();
    if (n == 0) throw DegenerateSelection("no observations");
    const std::size_t p = covars.empty() ? 0 : covars[0].size();
    std::size_t ones = 0;
    for (int v : y) ones += v;
    if (ones == 0 || ones == n)
        throw DegenerateSelection("response is constant; logistic fit is degenerate");

    Eigen::MatrixXd X(n, p + 1);
    Eigen::VectorXd yv(n);
    for (std::size_t i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        for (std::size_t j = 0; j < p; ++j) X(i, j + 1) = covars[i][j];
        yv(i) = y[i];
    }

    LogisticFit fit;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
    for (int it = 0; it < opts.max_iterations; ++it) {
        fit.iterations = it + 1;
        Eigen::VectorXd eta = X * beta;
        Eigen::VectorXd mu(n), w(n);
        for (std::size_t i = 0; i < n; ++i) {
            mu(i) = expit(eta(i));
            w(i) = std::max(mu(i) * (1.0 - mu(i)), 1e-12);
        }
        Eigen::VectorXd grad = X.transpose() * (yv - mu);
        if (grad.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
            fit.converged = true;
            break;
        }
        Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X;
        beta += H.ldlt().solve(grad);
        if (beta.lpNorm<Eigen::Infinity>() > 30.0) {
            // Diverging coefficients: clamp here and report the separation.
            fit.separation = true;
            break;
        }
    }
    fit.coef.assign(beta.data(), beta.data() + beta.size());
    return fit;
}

}  // namespace deduct
