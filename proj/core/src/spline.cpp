#include "gbsde/spline.hpp"

#include "gbsde/errors.hpp"

#include <algorithm>
#include <cmath>

namespace gbsde {

Spline1D::Spline1D(std::span<const double> xs, std::span<const double> ys)
    : xs_(xs.begin(), xs.end()), ys_(ys.begin(), ys.end())
{
    const std::size_t n = xs_.size();
    if (n < 4) {
        throw InvalidArgument("spline needs at least 4 knots");
    }
    if (ys_.size() != n) {
        throw InvalidArgument("spline knots and values differ in length");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(xs_[i]) || !std::isfinite(ys_[i])) {
            throw InvalidArgument("spline data must be finite");
        }
        if (i > 0 && !(xs_[i] > xs_[i - 1])) {
            throw InvalidArgument("spline knots must be strictly increasing");
        }
    }

    std::vector<double> h(n - 1);
    std::vector<double> slope(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = xs_[i + 1] - xs_[i];
        slope[i] = (ys_[i + 1] - ys_[i]) / h[i];
    }

    // Second-derivative moments M_0..M_{n-1}. Interior equations
    //   h_{i-1} M_{i-1} + 2 (h_{i-1} + h_i) M_i + h_i M_{i+1} = 6 (s_i - s_{i-1}),
    // with M_0 and M_{n-1} eliminated through the not-a-knot conditions (continuous third
    // derivative at x_1 and x_{n-2}). What remains is tridiagonal in M_1..M_{n-2}.
    const std::size_t m = n - 2;
    std::vector<double> lower(m, 0.0), diag(m, 0.0), upper(m, 0.0), rhs(m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        const std::size_t i = r + 1;
        lower[r] = h[i - 1];
        diag[r] = 2.0 * (h[i - 1] + h[i]);
        upper[r] = h[i];
        rhs[r] = 6.0 * (slope[i] - slope[i - 1]);
    }
    // M_0 = ((h0 + h1) M_1 - h0 M_2) / h1
    {
        const double h0 = h[0], h1 = h[1];
        diag[0] += h0 * (h0 + h1) / h1;
        upper[0] -= h0 * h0 / h1;
        lower[0] = 0.0;
    }
    // M_{n-1} = ((h_{n-3} + h_{n-2}) M_{n-2} - h_{n-2} M_{n-3}) / h_{n-3}
    {
        const double ha = h[n - 3], hb = h[n - 2];
        diag[m - 1] += hb * (ha + hb) / ha;
        lower[m - 1] -= hb * hb / ha;
        upper[m - 1] = 0.0;
    }

    // Thomas algorithm.
    for (std::size_t r = 1; r < m; ++r) {
        const double w = lower[r] / diag[r - 1];
        diag[r] -= w * upper[r - 1];
        rhs[r] -= w * rhs[r - 1];
    }
    std::vector<double> moments(n, 0.0);
    moments[m] = rhs[m - 1] / diag[m - 1];
    for (std::size_t r = m - 1; r-- > 0;) {
        moments[r + 1] = (rhs[r] - upper[r] * moments[r + 2]) / diag[r];
    }
    moments[0] = ((h[0] + h[1]) * moments[1] - h[0] * moments[2]) / h[1];
    moments[n - 1] =
        ((h[n - 3] + h[n - 2]) * moments[n - 2] - h[n - 2] * moments[n - 3]) / h[n - 3];

    b_.resize(n - 1);
    c_.resize(n - 1);
    d_.resize(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        b_[i] = slope[i] - h[i] * (2.0 * moments[i] + moments[i + 1]) / 6.0;
        c_[i] = 0.5 * moments[i];
        d_[i] = (moments[i + 1] - moments[i]) / (6.0 * h[i]);
    }
    const std::size_t last = n - 2;
    right_slope_ = b_[last] + 2.0 * c_[last] * h[last] + 3.0 * d_[last] * h[last] * h[last];

    const double span = xs_.back() - xs_.front();
    const double mean = span / static_cast<double>(n - 1);
    uniform_ = std::all_of(h.begin(), h.end(),
                           [&](double hi) { return std::abs(hi - mean) <= 1e-12 * span; });
    inv_dx_ = 1.0 / mean;
}

std::size_t Spline1D::interval(double x) const noexcept
{
    const std::size_t last = xs_.size() - 2;
    std::size_t i;
    if (uniform_) {
        const double pos = std::floor((x - xs_.front()) * inv_dx_);
        i = pos <= 0.0 ? 0 : std::min(static_cast<std::size_t>(pos), last);
        // Correct for rounding in the index estimate.
        if (i > 0 && x < xs_[i]) {
            --i;
        } else if (i < last && x >= xs_[i + 1]) {
            ++i;
        }
    } else {
        auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        const auto pos = static_cast<std::size_t>(std::distance(xs_.begin(), it));
        i = pos == 0 ? 0 : std::min(pos - 1, last);
    }
    return i;
}

double Spline1D::operator()(double x) const noexcept
{
    if (x < xs_.front()) {
        return ys_.front() + b_.front() * (x - xs_.front());
    }
    if (x > xs_.back()) {
        return ys_.back() + right_slope_ * (x - xs_.back());
    }
    const std::size_t i = interval(x);
    const double t = x - xs_[i];
    return ys_[i] + t * (b_[i] + t * (c_[i] + t * d_[i]));
}

double Spline1D::derivative(double x) const noexcept
{
    if (x < xs_.front()) {
        return b_.front();
    }
    if (x > xs_.back()) {
        return right_slope_;
    }
    const std::size_t i = interval(x);
    const double t = x - xs_[i];
    return b_[i] + t * (2.0 * c_[i] + 3.0 * t * d_[i]);
}

double Spline1D::second_derivative(double x) const noexcept
{
    if (x < xs_.front() || x > xs_.back()) {
        return 0.0;
    }
    const std::size_t i = interval(x);
    const double t = x - xs_[i];
    return 2.0 * c_[i] + 6.0 * t * d_[i];
}

}  // namespace gbsde
