#include "gbsde/errors.hpp"
#include "gbsde/lattice.hpp"
#include "gbsde/oracle.hpp"
#include "gbsde/problems.hpp"
#include "gbsde/scheme.hpp"
#include "gbsde/spline.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace gbsde {
namespace {

ProblemSpec heat(TerminalFunction phi, UncertaintySpec u = {0.25, 1.0})
{
    ProblemSpec p;
    p.f = [](double, double) { return 0.0; };
    p.g = [](double, double) { return 0.0; };
    p.terminal = std::move(phi);
    p.uncertainty = u;
    return p;
}

SchemeParams params_with(int n, int depth, double th1 = 0.0, double th2 = 0.0)
{
    SchemeParams s;
    s.n_steps = n;
    s.lattice_depth = depth;
    s.theta1 = th1;
    s.theta2 = th2;
    return s;
}

TEST(DiscountFactor, Values)
{
    EXPECT_EQ(discount_factor(0.0, 0.1, {0.37, 0.05}), 1.0);
    EXPECT_DOUBLE_EQ(discount_factor(1.0, 0.01, {0.1, 0.01}), std::exp(0.095));
    EXPECT_THROW(discount_factor(1e3, 1.0, {1e3, 0.0}), OverflowError);
}

TEST(DiscountFactor, UnitExpectationWhenBIsZero)
{
    auto x = [](const IncrementPair& inc) { return discount_factor(0.0, 0.125, inc); };
    EXPECT_EQ(lattice_expectation(x, 0.125, 16, {0.25, 1.0}), 1.0);
}

TEST(StepBackward, ConstantIsPreserved)
{
    const auto problem = heat([](double) { return 1.75; });
    const auto params = params_with(8, 12);
    const auto grid = resolve_grid({}, problem, params);
    const std::vector<double> y(grid.points().size(), 1.75);
    const auto out = step_backward(y, 0.5, problem, grid, params);
    for (double v : out.values) {
        EXPECT_NEAR(v, 1.75, 1e-14);
    }
}

TEST(StepBackward, LinearDataIsReproduced)
{
    const auto problem = heat([](double x) { return x; });
    const auto params = params_with(8, 16);
    const auto grid = resolve_grid({}, problem, params);
    const auto xs = grid.points();
    const auto out = step_backward(xs, 0.25, problem, grid, params);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        EXPECT_NEAR(out.values[i], xs[i], 1e-10);
    }
}

// Rebuilds one explicit step of Example 1 from the brute-force oracle and the same spline.
TEST(StepBackward, ExplicitStepMatchesOracleComposition)
{
    const auto e = example1({0.25, 1.0});
    const auto params = params_with(8, 3);
    const GridSpec grid{3.0, 0.125, 1.0};
    const double dt = 0.125, t_n = 1.0 - dt, t_next = 1.0;
    const auto xs = grid.points();
    std::vector<double> y;
    for (double x : xs) {
        y.push_back(e.spec.terminal(x));
    }
    const Spline1D spline(xs, y);
    const auto out = step_backward(y, t_n, e.spec, grid, params);
    for (std::size_t i = 0; i < xs.size(); i += 3) {
        auto payoff = [&](const IncrementPair& inc) {
            const double yh = spline(xs[i] + inc.delta_b);
            return yh + e.spec.f(t_next, yh) * dt + e.spec.g(t_next, yh) * inc.delta_qv;
        };
        EXPECT_NEAR(out.values[i], oracle_expectation(payoff, dt, 3, e.spec.uncertainty), 1e-12)
            << "x=" << xs[i];
    }
}

// Same idea for the implicit, discounted case (Example 2, theta = (0.5, 0.5)): the test solves
// the scalar equation with its own loop around the oracle.
TEST(StepBackward, ImplicitStepMatchesOracleComposition)
{
    const auto e = example2({0.5, 1.0});
    const double th1 = 0.5, th2 = 0.5;
    const auto params = params_with(4, 3, th1, th2);
    const GridSpec grid{2.0, 0.25, 0.5};
    const double dt = 0.25, t_n = 0.5, t_next = 0.75;
    const auto xs = grid.points();
    std::vector<double> y;
    for (double x : xs) {
        y.push_back(e.exact_y.value()(t_next, x));
    }
    const Spline1D spline(xs, y);
    const auto out = step_backward(y, t_n, e.spec, grid, params);
    for (std::size_t i = 0; i < xs.size(); i += 2) {
        const double x = xs[i];
        const double b = e.spec.b(t_n, x);
        auto value_for = [&](double yn) {
            auto payoff = [&](const IncrementPair& inc) {
                const double yh = spline(x + inc.delta_b);
                const double disc = std::exp(b * inc.delta_b - 0.5 * b * b * inc.delta_qv);
                return disc * yh + (1 - th1) * disc * e.spec.f(t_next, yh) * dt +
                       (th2 * e.spec.g(t_n, yn) + (1 - th2) * disc * e.spec.g(t_next, yh)) * inc.delta_qv;
            };
            return th1 * e.spec.f(t_n, yn) * dt + oracle_expectation(payoff, dt, 3, e.spec.uncertainty);
        };
        double yn = y[i];
        for (int it = 0; it < 200; ++it) {
            yn = value_for(yn);
        }
        EXPECT_NEAR(out.values[i], yn, 1e-12) << "x=" << x;
    }
}

TEST(StepBackward, RequiresResolvedDepth)
{
    const auto problem = heat([](double x) { return x; });
    SchemeParams params;
    const auto grid = resolve_grid({}, problem, params);
    EXPECT_THROW(step_backward(grid.points(), 0.0, problem, grid, params), InvalidArgument);
}

TEST(StepBackward, PicardFailureCarriesLocation)
{
    const auto e = example1();
    auto params = params_with(8, 4, 0.0, 1.0);
    params.picard_max_iter = 1;
    const auto grid = resolve_grid({}, e.spec, params);
    std::vector<double> y;
    for (double x : grid.points()) {
        y.push_back(e.spec.terminal(x));
    }
    try {
        step_backward(y, 0.875, e.spec, grid, params);
        FAIL() << "expected StepError";
    } catch (const StepError& err) {
        EXPECT_DOUBLE_EQ(err.t(), 0.875);
        EXPECT_NE(err.previous(), err.last());
    }
    try {
        solve(e.spec, grid, params);
        FAIL() << "expected StepError";
    } catch (const StepError& err) {
        EXPECT_EQ(err.step(), 7);
        EXPECT_NE(std::string(err.what()).find("n=7"), std::string::npos);
    }
}

TEST(Solve, RejectsNonzeroA)
{
    auto e = example1();
    e.spec.a = [](double, double x) { return x > 1.0 ? 0.1 : 0.0; };
    const auto params = params_with(4, 4);
    EXPECT_THROW(solve(e.spec, resolve_grid({}, e.spec, params), params), InvalidArgument);
    e.spec.a = [](double, double) { return 0.0; };
    EXPECT_NO_THROW(solve(e.spec, resolve_grid({}, e.spec, params), params));
}

TEST(Solve, RejectsInvalidParameters)
{
    const auto e = example1();
    const auto grid = resolve_grid({}, e.spec, params_with(8, 4));
    EXPECT_THROW(solve(e.spec, grid, params_with(8, 4, 1.5, 0.0)), InvalidArgument);
    EXPECT_THROW(solve(e.spec, grid, params_with(0, 4)), InvalidArgument);
    EXPECT_THROW(solve(e.spec, grid, params_with(8, 0)), InvalidArgument);
    EXPECT_THROW(solve(e.spec, GridSpec{3.0, 0.0, 1.0}, params_with(8, 4)), InvalidArgument);
    EXPECT_THROW(solve(e.spec, GridSpec{0.1, 0.1, 0.0}, params_with(8, 4)), InvalidArgument);
}

TEST(Solve, MartingaleCase)
{
    const auto m = trivial_cases()[0];
    const auto params = params_with(8, 16);
    const auto r = solve(m.spec, resolve_grid({}, m.spec, params), params);
    EXPECT_NEAR(r.y0_at_origin, 0.0, 1e-9);
}

TEST(Solve, Example1ExplicitCoarse)
{
    const auto e = example1({0.25, 1.0});
    SchemeParams params;
    params.n_steps = 8;
    const auto r = solve(e.spec, resolve_grid({}, e.spec, params), params);
    const double err = std::abs(r.y0_at_origin - 0.0);
    EXPECT_GE(err, 2.7e-3);
    EXPECT_LE(err, 2.4e-2);
    EXPECT_EQ(r.picard_iters_max, 1);
}

TEST(Solve, GridLayout)
{
    const GridSpec grid{3.0, 0.125, 3.0};
    const auto xs = grid.points();
    EXPECT_EQ(xs.size(), 97u);
    EXPECT_EQ(xs[grid.origin_index()], 0.0);
    EXPECT_DOUBLE_EQ(xs.front(), -6.0);
    EXPECT_DOUBLE_EQ(xs.back(), 6.0);
    const auto e = example1();
    SchemeParams params;
    params.n_steps = 16;
    const auto resolved = resolve_grid({}, e.spec, params);
    EXPECT_DOUBLE_EQ(resolved.dx, 1.0 / 16);
    EXPECT_DOUBLE_EQ(resolved.pad, 3.0);
    EXPECT_DOUBLE_EQ(resolved.half_width, 3.0);
}

TEST(Solve, ExplicitThetaUsesSingleEvaluation)
{
    const auto e = example2({0.25, 1.0});
    const auto params = params_with(8, 8);
    const auto r = solve(e.spec, resolve_grid({}, e.spec, params), params);
    EXPECT_EQ(r.picard_iters_max, 1);
    const auto implicit = params_with(8, 8, 0.5, 0.5);
    EXPECT_GT(solve(e.spec, resolve_grid({}, e.spec, implicit), implicit).picard_iters_max, 1);
}

TEST(Solve, Deterministic)
{
    const auto e = example2({0.5, 1.0});
    auto params = params_with(8, 8, 0.5, 0.5);
    const auto grid = resolve_grid({}, e.spec, params);
    const auto a = solve(e.spec, grid, params);
    const auto b = solve(e.spec, grid, params);
    params.threads = 3;
    const auto c = solve(e.spec, grid, params);
    EXPECT_EQ(a.y_grid_t0, b.y_grid_t0);
    EXPECT_EQ(a.y_grid_t0, c.y_grid_t0);
    EXPECT_EQ(a.y0_at_origin, c.y0_at_origin);
    EXPECT_EQ(a.picard_iters_max, c.picard_iters_max);
}

TEST(Stability, ConstantShiftIsExact)
{
    auto base = heat([](double x) { return std::sin(x) + 0.3 * std::cos(2 * x); });
    const auto params = params_with(8, 12);
    const auto grid = resolve_grid({}, base, params);
    const auto r0 = solve(base, grid, params);
    for (double delta : {1e-3, 1e-2, 0.5}) {
        auto shifted = base;
        shifted.terminal = [&, delta](double x) { return base.terminal(x) + delta; };
        const auto r1 = solve(shifted, grid, params);
        for (std::size_t i = 0; i < r0.y_grid_t0.size(); ++i) {
            EXPECT_NEAR(r1.y_grid_t0[i] - r0.y_grid_t0[i], delta, 1e-12);
        }
    }
}

TEST(Stability, BoundedAmplificationOnExamples)
{
    for (auto e : {example1({0.25, 1.0}), example2({0.25, 1.0})}) {
        const auto params = params_with(8, 8, 0.5, 0.5);
        const auto grid = resolve_grid({}, e.spec, params);
        const auto r0 = solve(e.spec, grid, params);
        const double bound_factor = 3.0 * std::exp(3.0 * e.spec.lipschitz_bound * e.spec.horizon);
        for (double delta : {1e-3, 1e-2}) {
            auto shifted = e.spec;
            const auto phi = e.spec.terminal;
            shifted.terminal = [phi, delta](double x) { return phi(x) + delta; };
            const auto r1 = solve(shifted, grid, params);
            EXPECT_LE(std::abs(r1.y0_at_origin - r0.y0_at_origin), bound_factor * delta) << e.id;
        }
    }
}

TEST(Comparison, OrderedTerminalDataGivesOrderedSolutions)
{
    const auto lower = heat([](double x) { return std::sin(x); });
    const auto upper = heat([](double x) { return std::sin(x) + 0.05 * std::exp(-x * x) + 0.01; });
    const auto params = params_with(8, 10);
    const auto grid = resolve_grid({}, lower, params);
    const auto a = solve(lower, grid, params);
    const auto b = solve(upper, grid, params);
    for (std::size_t i = 0; i < a.y_grid_t0.size(); ++i) {
        EXPECT_LE(a.y_grid_t0[i], b.y_grid_t0[i]);
    }
}

TEST(SelectDepth, ConstantDataReturnsInitial)
{
    const auto c = trivial_cases()[1];
    SchemeParams params;
    params.n_steps = 8;
    const auto sel = select_depth(c.spec, resolve_grid({}, c.spec, params), params, 0.875, 1e-12);
    EXPECT_EQ(sel.depth, params.depth_policy.initial);
    EXPECT_EQ(sel.achieved_delta, 0.0);
    EXPECT_FALSE(sel.capped);
}

TEST(SelectDepth, HugeToleranceReturnsInitial)
{
    const auto e = example1();
    SchemeParams params;
    params.n_steps = 8;
    const auto sel = select_depth(e.spec, resolve_grid({}, e.spec, params), params, 0.875, 1.0);
    EXPECT_EQ(sel.depth, params.depth_policy.initial);
}

TEST(SelectDepth, Example1SelfConsistent)
{
    const auto e = example1({0.25, 1.0});
    SchemeParams params;
    params.n_steps = 8;
    const double tol = 1e-5;
    const auto grid = resolve_grid({}, e.spec, params);
    const auto sel = select_depth(e.spec, grid, params, 0.875, tol);
    ASSERT_FALSE(sel.capped);
    EXPECT_LE(sel.achieved_delta, tol);

    // Independent re-run through step_backward at M and 2M.
    std::vector<double> y;
    for (double x : grid.points()) {
        y.push_back(e.spec.terminal(x));
    }
    auto at = [&](int depth) {
        auto p = params;
        p.lattice_depth = depth;
        return step_backward(y, 0.875, e.spec, grid, p).values[grid.origin_index()];
    };
    EXPECT_LE(std::abs(at(sel.depth) - at(2 * sel.depth)), tol);
}

TEST(SelectDepth, ReportsCap)
{
    const auto e = example1({0.25, 1.0});
    SchemeParams params;
    params.n_steps = 8;
    params.theta2 = 1.0;
    params.depth_policy = {4, 16, 1e-9};
    const auto sel = select_depth(e.spec, resolve_grid({}, e.spec, params), params, 0.875, 1e-9);
    EXPECT_TRUE(sel.capped);
    EXPECT_EQ(sel.depth, 16);
    EXPECT_GT(sel.achieved_delta, 1e-9);
}

TEST(ConvergenceStudy, Example1FirstOrder)
{
    const auto e = example1({0.25, 1.0});
    SchemeParams params;
    params.lattice_depth = 8;
    const std::vector<int> ns{8, 16, 32, 64};
    const auto table = convergence_study(e.spec, {}, params, ns);
    ASSERT_EQ(table.rows.size(), 4u);
    ASSERT_TRUE(table.rate);
    EXPECT_GT(table.rate->slope, 0.85);
    EXPECT_LT(table.rate->slope, 1.15);
    EXPECT_DOUBLE_EQ(table.rows[1].dx, 1.0 / 16);
}

TEST(ConvergenceStudy, ExactCaseIsBelowNoiseFloor)
{
    const auto m = trivial_cases()[0];
    SchemeParams params;
    params.lattice_depth = 8;
    const std::vector<int> ns{8, 16, 32};
    const auto table = convergence_study(m.spec, {}, params, ns);
    for (const auto& row : table.rows) {
        EXPECT_LE(row.error, 1e-9);
    }
    EXPECT_TRUE(table.below_noise_floor);
    EXPECT_FALSE(table.rate);
}

TEST(ConvergenceStudy, RejectsBadInput)
{
    auto e = example1();
    SchemeParams params;
    params.lattice_depth = 4;
    const std::vector<int> ns{8, 16};
    e.spec.exact_y0.reset();
    EXPECT_THROW(convergence_study(e.spec, {}, params, ns), ConfigurationError);
    const auto ok = example1();
    EXPECT_THROW(convergence_study(ok.spec, {}, params, std::vector<int>{8}), InvalidArgument);
    EXPECT_THROW(convergence_study(ok.spec, {}, params, std::vector<int>{16, 8}), InvalidArgument);
}

}  // namespace
}  // namespace gbsde
