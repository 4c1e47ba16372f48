#pragma once

#include "gbsde/errors.hpp"

#include <cmath>
#include <concepts>

namespace gbsde {

struct FixedPointResult {
    double value = 0.0;
    int iterations = 0;
};

/// Picard iteration y_{k+1} = map(y_k) from `start`.
///
/// Returns the first iterate y_{k+1} with |y_{k+1} - y_k| <= tol together with the number of
/// map applications. Throws DivergenceError (carrying the last two iterates) if that does
/// not happen within max_iter applications or an iterate becomes non-finite.
template <std::invocable<double> Map>
FixedPointResult fixed_point(Map&& map, double start, double tol, int max_iter)
{
    if (!(tol > 0.0) || max_iter < 1) {
        throw InvalidArgument("fixed_point requires tol > 0 and max_iter >= 1");
    }
    double prev = start;
    for (int it = 1; it <= max_iter; ++it) {
        const double next = static_cast<double>(map(prev));
        if (!std::isfinite(next)) {
            throw DivergenceError(prev, next, it);
        }
        if (std::abs(next - prev) <= tol) {
            return {next, it};
        }
        if (it == max_iter) {
            throw DivergenceError(prev, next, it);
        }
        prev = next;
    }
    throw DivergenceError(prev, prev, max_iter);  // unreachable
}

}  // namespace gbsde
