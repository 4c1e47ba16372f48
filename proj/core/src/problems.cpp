#include "gbsde/problems.hpp"

#include <cmath>

namespace gbsde {

namespace {

constexpr double kHorizon = 1.0;

double zero_driver(double, double) { return 0.0; }

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

ProblemCatalogEntry example1(const UncertaintySpec& u)
{
    ProblemCatalogEntry e;
    e.id = "example1";
    e.description = "linear: f = -y, g = y/2, b = 0, phi = e^T sin(x); Y_t = e^t sin(B_t)";
    e.spec.f = [](double, double y) { return -y; };
    e.spec.g = [](double, double y) { return 0.5 * y; };
    e.spec.terminal = [](double x) { return std::exp(kHorizon) * std::sin(x); };
    e.spec.horizon = kHorizon;
    e.spec.uncertainty = u;
    e.spec.exact_y0 = 0.0;
    e.spec.lipschitz_bound = 1.0;
    e.exact_y = [](double t, double x) { return std::exp(t) * std::sin(x); };
    return e;
}

ProblemCatalogEntry example2(const UncertaintySpec& u)
{
    ProblemCatalogEntry e;
    e.id = "example2";
    e.description =
        "nonlinear: f = y^2 - y, g = -y^3 + 2.5y^2 - 1.5y, b = 1, phi = logistic(T + x); "
        "Y_t = logistic(t + B_t)";
    // The dt driver carries the -Y term of the equation, so f(t, y) = y^2 - y.
    e.spec.f = [](double, double y) { return y * y - y; };
    e.spec.g = [](double, double y) { return ((-y + 2.5) * y - 1.5) * y; };
    e.spec.b = [](double, double) { return 1.0; };
    e.spec.terminal = [](double x) { return logistic(kHorizon + x); };
    e.spec.horizon = kHorizon;
    e.spec.uncertainty = u;
    e.spec.exact_y0 = 0.5;
    // Derivative bound of both drivers on y in [-0.5, 1.5].
    e.spec.lipschitz_bound = 4.0;
    e.exact_y = [](double t, double x) { return logistic(t + x); };
    return e;
}

std::vector<ProblemCatalogEntry> trivial_cases(const UncertaintySpec& u, double constant)
{
    auto base = [&](std::string id, std::string description) {
        ProblemCatalogEntry e;
        e.id = std::move(id);
        e.description = std::move(description);
        e.spec.f = zero_driver;
        e.spec.g = zero_driver;
        e.spec.horizon = kHorizon;
        e.spec.uncertainty = u;
        e.spec.lipschitz_bound = 1.0;
        return e;
    };

    std::vector<ProblemCatalogEntry> out;

    auto martingale = base("martingale", "f = g = 0, phi = x; Y_t = B_t");
    martingale.spec.terminal = [](double x) { return x; };
    martingale.spec.exact_y0 = 0.0;
    martingale.exact_y = [](double, double x) { return x; };
    out.push_back(std::move(martingale));

    auto constant_case = base("constant", "f = g = 0, phi = c; Y_t = c");
    constant_case.spec.terminal = [constant](double) { return constant; };
    constant_case.spec.exact_y0 = constant;
    constant_case.exact_y = [constant](double, double) { return constant; };
    out.push_back(std::move(constant_case));

    const double hi = u.sigma_hi_sq;
    auto variance = base("variance", "f = g = 0, phi = x^2; Y_t = B_t^2 + sigma_hi^2 (T - t)");
    variance.spec.terminal = [](double x) { return x * x; };
    variance.spec.exact_y0 = hi * kHorizon;
    variance.exact_y = [hi](double t, double x) { return x * x + hi * (kHorizon - t); };
    out.push_back(std::move(variance));

    return out;
}

std::vector<ProblemCatalogEntry> problem_catalog(const UncertaintySpec& u)
{
    std::vector<ProblemCatalogEntry> out;
    out.push_back(example1(u));
    out.push_back(example2(u));
    for (auto& e : trivial_cases(u)) {
        out.push_back(std::move(e));
    }

    // No closed form for sigma_lo < sigma_hi: sin is neither convex nor concave.
    ProblemCatalogEntry sine;
    sine.id = "sine_heat";
    sine.description = "f = g = 0, phi = sin(x); no closed-form solution";
    sine.spec.f = zero_driver;
    sine.spec.g = zero_driver;
    sine.spec.terminal = [](double x) { return std::sin(x); };
    sine.spec.horizon = kHorizon;
    sine.spec.uncertainty = u;
    out.push_back(std::move(sine));
    return out;
}

std::optional<ProblemCatalogEntry> find_problem(const std::string& id, const UncertaintySpec& u)
{
    for (auto& e : problem_catalog(u)) {
        if (e.id == id) {
            return std::move(e);
        }
    }
    return std::nullopt;
}

}  // namespace gbsde
