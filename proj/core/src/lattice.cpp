#include "gbsde/lattice.hpp"

#include "gbsde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gbsde {

void UncertaintySpec::validate() const
{
    if (!(std::isfinite(sigma_lo_sq) && std::isfinite(sigma_hi_sq)) || !(sigma_lo_sq > 0.0) ||
        sigma_lo_sq > sigma_hi_sq) {
        std::ostringstream os;
        os << "invalid uncertainty interval [" << sigma_lo_sq << ", " << sigma_hi_sq
           << "]: need 0 < sigma_lo_sq <= sigma_hi_sq";
        throw InvalidUncertainty(os.str());
    }
}

IncrementPair node_increment(int k, int j, double dt, int depth, const UncertaintySpec& u)
{
    const double unit = u.sigma_hi_sq * dt / depth;
    return {std::sqrt(unit) * k, unit * j};
}

LatticeNodeGrid::LatticeNodeGrid(int depth)
    : depth_(depth), level_(depth)
{
    if (depth < 1) {
        throw InvalidArgument("lattice depth must be >= 1");
    }
    values_.assign(node_count(depth), 0.0);
}

void LatticeNodeGrid::seed(const Payoff& payoff, double dt, const UncertaintySpec& u)
{
    const double unit = u.sigma_hi_sq * dt / depth_;
    const double h = std::sqrt(unit);
    for (int j = 0; j <= depth_; ++j) {
        auto r = row(j);
        for (int p = 0; p <= j; ++p) {
            const int k = 2 * p - j;
            const double v = payoff({h * k, unit * j});
            if (!std::isfinite(v)) {
                throw EvaluationError(k, j, v);
            }
            r[static_cast<std::size_t>(p)] = v;
        }
    }
    level_ = depth_;
}

void LatticeNodeGrid::step_back(const UncertaintySpec& u) noexcept
{
    // value = stay + q * (mean_of_jumps - stay) is linear in q, and 0 < q_lo <= q_hi, so the
    // maximum is q_hi * d for d >= 0 and q_lo * d otherwise. At d = 0 both give the same
    // value, which we attribute to q_hi.
    const double q_hi = u.q_hi();
    const double q_lo = u.q_lo();
    const int m = level_ - 1;
    double* v = values_.data();
    for (int j = 0; j <= m; ++j) {
        // Rows j and j + 1 do not overlap.
        double* __restrict cur = v + row_offset(j);
        const double* __restrict up = v + row_offset(j + 1);
        for (int p = 0; p <= j; ++p) {
            const double stay = cur[p];
            const double d = 0.5 * (up[p + 1] + up[p]) - stay;
            cur[p] = stay + std::max(q_hi * d, q_lo * d);
        }
    }
    level_ = m;
}

double LatticeNodeGrid::collapse(const UncertaintySpec& u) noexcept
{
    while (level_ > 0) {
        step_back(u);
    }
    return values_[0];
}

double lattice_expectation(const Payoff& payoff, double dt, int depth, const UncertaintySpec& u)
{
    u.validate();
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw InvalidArgument("time step must be positive and finite");
    }
    LatticeNodeGrid grid(depth);
    grid.seed(payoff, dt, u);
    return grid.collapse(u);
}

std::vector<std::pair<int, double>> lattice_endpoints(double x0, double dt, int depth,
                                                      double sigma_hi_sq)
{
    if (!(dt > 0.0) || depth < 1 || !(sigma_hi_sq > 0.0)) {
        throw InvalidArgument("lattice_endpoints requires dt > 0, depth >= 1, sigma_hi_sq > 0");
    }
    const double h = std::sqrt(sigma_hi_sq * dt / depth);
    std::vector<std::pair<int, double>> points;
    points.reserve(static_cast<std::size_t>(2 * depth + 1));
    for (int k = -depth; k <= depth; ++k) {
        points.emplace_back(k, x0 + h * k);
    }
    return points;
}

}  // namespace gbsde
