#include "gbsde/rate_fit.hpp"

#include "gbsde/errors.hpp"

#include <cmath>
#include <vector>

namespace gbsde {

RateFit fit_rate(std::span<const int> ns, std::span<const double> errors)
{
    if (ns.size() != errors.size()) {
        throw InvalidArgument("fit_rate: step counts and errors differ in length");
    }
    if (ns.size() < 2) {
        throw InvalidArgument("fit_rate: need at least two points");
    }
    const std::size_t n = ns.size();
    std::vector<double> u(n), v(n);
    double mu = 0.0, mv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (ns[i] <= 0) {
            throw InvalidArgument("fit_rate: step counts must be positive");
        }
        if (!(errors[i] > 0.0) || !std::isfinite(errors[i])) {
            throw InvalidArgument("fit_rate: errors must be positive and finite");
        }
        u[i] = -std::log(static_cast<double>(ns[i]));
        v[i] = std::log(errors[i]);
        mu += u[i];
        mv += v[i];
    }
    mu /= static_cast<double>(n);
    mv /= static_cast<double>(n);
    double suu = 0.0, suv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        suu += (u[i] - mu) * (u[i] - mu);
        suv += (u[i] - mu) * (v[i] - mv);
    }
    if (suu == 0.0) {
        throw InvalidArgument("fit_rate: step counts must not all be equal");
    }
    RateFit fit;
    fit.slope = suv / suu;
    fit.intercept = mv - fit.slope * mu;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = v[i] - (fit.intercept + fit.slope * u[i]);
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / static_cast<double>(n));
    return fit;
}

}  // namespace gbsde
