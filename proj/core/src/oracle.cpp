#include "gbsde/oracle.hpp"

#include "gbsde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gbsde {

namespace {

struct TreeWalk {
    const Payoff& payoff;
    int depth;
    double h;     // jump size
    double unit;  // quadratic variation per jump
    double q_lo;
    double q_hi;

    // Value of the history that has taken `steps` sub-steps, sits at walk sum `walk`
    // (in units of h) and has accumulated `jumps` jumps.
    double value(int steps, int walk, int jumps) const
    {
        if (steps == depth) {
            const double v = payoff({h * walk, unit * jumps});
            if (!std::isfinite(v)) {
                throw EvaluationError(walk, jumps, v);
            }
            return v;
        }
        const double up = value(steps + 1, walk + 1, jumps + 1);
        const double down = value(steps + 1, walk - 1, jumps + 1);
        const double stay = value(steps + 1, walk, jumps);
        auto linear = [&](double q) { return q / 2.0 * up + q / 2.0 * down + (1.0 - q) * stay; };
        return std::max(linear(q_lo), linear(q_hi));
    }
};

}  // namespace

double oracle_expectation(const Payoff& payoff, double dt, int depth, const UncertaintySpec& u)
{
    if (depth > kOracleMaxDepth) {
        throw CapacityError("oracle depth " + std::to_string(depth) + " exceeds maximum " +
                            std::to_string(kOracleMaxDepth));
    }
    if (depth < 1) {
        throw InvalidArgument("oracle depth must be >= 1");
    }
    if (!(dt > 0.0)) {
        throw InvalidArgument("time step must be positive");
    }
    u.validate();
    const double unit = u.sigma_hi_sq * dt / depth;
    const TreeWalk walk{payoff, depth, std::sqrt(unit), unit, u.sigma_lo_sq / u.sigma_hi_sq, 1.0};
    return walk.value(0, 0, 0);
}

}  // namespace gbsde
