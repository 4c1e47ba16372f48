#pragma once

#include <span>
#include <vector>

namespace gbsde {

/// Not-a-knot cubic spline through strictly increasing knots.
///
/// Inside [front knot, back knot] the interpolant is piecewise cubic and C2; outside it is
/// continued linearly with the boundary slope.
class Spline1D {
public:
    Spline1D() = default;

    /// Throws InvalidArgument if fewer than 4 knots, sizes differ, knots are not strictly
    /// increasing, or any value is non-finite.
    Spline1D(std::span<const double> xs, std::span<const double> ys);

    double operator()(double x) const noexcept;

    std::span<const double> knots() const noexcept { return xs_; }
    std::size_t size() const noexcept { return xs_.size(); }

    double left_slope() const noexcept { return b_.front(); }
    double right_slope() const noexcept { return right_slope_; }

    /// First and second derivative of the piecewise cubic (linear parts outside the knots).
    double derivative(double x) const noexcept;
    double second_derivative(double x) const noexcept;

private:
    std::size_t interval(double x) const noexcept;

    // On [x_i, x_{i+1}]: y_i + b_i t + c_i t^2 + d_i t^3 with t = x - x_i.
    std::vector<double> xs_;
    std::vector<double> ys_;
    std::vector<double> b_;
    std::vector<double> c_;
    std::vector<double> d_;
    double right_slope_ = 0.0;
    bool uniform_ = false;
    double inv_dx_ = 0.0;
};

inline Spline1D spline_build(std::span<const double> xs, std::span<const double> ys)
{
    return Spline1D(xs, ys);
}

inline double spline_eval(const Spline1D& s, double x) noexcept { return s(x); }

}  // namespace gbsde
