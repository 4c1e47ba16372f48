#pragma once

#include <span>

namespace gbsde {

/// Least-squares line log(error) = intercept + slope * log(1/N).
struct RateFit {
    double slope = 0.0;      // convergence order
    double intercept = 0.0;
    double residual = 0.0;   // root-mean-square deviation in log space
};

/// Fits the convergence order of `errors` against step counts `ns`.
/// Throws InvalidArgument for mismatched or short input (fewer than 2 points, or all N
/// equal) and for a non-positive N or error.
RateFit fit_rate(std::span<const int> ns, std::span<const double> errors);

}  // namespace gbsde
