#pragma once
#include <vector>

#include "deduct/support.hpp"

namespace deduct {

/// Probability table over the flat indices of a DiscretizedSupport.
struct DiscreteDistribution {
    const DiscretizedSupport* support = nullptr;
    std::vector<double> probs;

    double total() const;
    /// Throws InvariantViolation unless probs >= 0 and sum to 1 within tol.
    void validate(double tol = 1e-12) const;
};

/// (1 - epsilon) * g + epsilon * point mass at `flat`.
DiscreteDistribution perturb(const DiscreteDistribution& g, std::size_t flat, double epsilon);

/// Record overload; throws NotInSupport if the record is not a support point.
DiscreteDistribution perturb(const DiscreteDistribution& g, const ObservedRecord& rec,
                             double epsilon);

}  // namespace deduct
