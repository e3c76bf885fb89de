#include "deduct/distribution.hpp"

#include <cmath>
#include <string>

#include "deduct/errors.hpp"

namespace deduct {

double DiscreteDistribution::total() const {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
}

void DiscreteDistribution::validate(double tol) const {
    if (!support || probs.size() != support->size())
        throw InvariantViolation("distribution does not match its support");
    for (double p : probs)
        if (!(p >= 0.0)) throw InvariantViolation("negative or NaN probability");
    const double s = total();
    if (std::abs(s - 1.0) > tol)
        throw InvariantViolation("probabilities sum to " + std::to_string(s) + ", not 1");
}

DiscreteDistribution perturb(const DiscreteDistribution& g, std::size_t flat, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw InvariantViolation("perturbation mass must lie in (0, 1)");
    DiscreteDistribution out;
    out.support = g.support;
    out.probs.resize(g.probs.size());
    const double keep = 1.0 - epsilon;
    for (std::size_t i = 0; i < g.probs.size(); ++i) out.probs[i] = keep * g.probs[i];
    out.probs.at(flat) += epsilon;
    return out;
}

DiscreteDistribution perturb(const DiscreteDistribution& g, const ObservedRecord& rec,
                             double epsilon) {
    return perturb(g, g.support->index_of(rec), epsilon);
}

}  // namespace deduct
