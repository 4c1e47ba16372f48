#include "gbsde/scheme.hpp"

#include "gbsde/errors.hpp"
#include "gbsde/fixed_point.hpp"
#include "gbsde/spline.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

namespace gbsde {

void ProblemSpec::validate() const
{
    if (!f || !g || !terminal) {
        throw InvalidArgument("problem needs f, g and a terminal function");
    }
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw InvalidArgument("horizon must be positive and finite");
    }
    if (!(lipschitz_bound > 0.0)) {
        throw InvalidArgument("lipschitz_bound must be positive");
    }
    uncertainty.validate();
}

void GridSpec::validate() const
{
    if (!(dx > 0.0) || !std::isfinite(dx)) {
        throw InvalidArgument("grid spacing dx must be positive and finite");
    }
    if (!(half_width > 0.0) || !(pad >= 0.0) || !std::isfinite(half_width + pad)) {
        throw InvalidArgument("grid needs half_width > 0 and pad >= 0");
    }
    if (points().size() < 4) {
        throw InvalidArgument("grid must contain at least 4 points");
    }
}

namespace {

int half_count(const GridSpec& grid)
{
    // Small slack so that an extent that is an exact multiple of dx is not rounded up.
    return static_cast<int>(std::ceil((grid.half_width + grid.pad) / grid.dx - 1e-9));
}

}  // namespace

std::vector<double> GridSpec::points() const
{
    const int half = half_count(*this);
    std::vector<double> xs;
    xs.reserve(static_cast<std::size_t>(2 * half + 1));
    for (int i = -half; i <= half; ++i) {
        xs.push_back(i * dx);
    }
    return xs;
}

std::size_t GridSpec::origin_index() const { return static_cast<std::size_t>(half_count(*this)); }

void SchemeParams::validate() const
{
    if (!(theta1 >= 0.0 && theta1 <= 1.0) || !(theta2 >= 0.0 && theta2 <= 1.0)) {
        throw InvalidArgument("theta1 and theta2 must lie in [0, 1]");
    }
    if (n_steps < 1) {
        throw InvalidArgument("number of time steps must be >= 1");
    }
    if (lattice_depth && *lattice_depth < 1) {
        throw InvalidArgument("lattice depth must be >= 1");
    }
    if (depth_policy.initial < 1 || depth_policy.cap < depth_policy.initial ||
        !(depth_policy.tol > 0.0)) {
        throw InvalidArgument("depth policy needs 1 <= initial <= cap and tol > 0");
    }
    if (!(picard_tol > 0.0) || picard_max_iter < 1) {
        throw InvalidArgument("picard_tol must be > 0 and picard_max_iter >= 1");
    }
}

GridSpec resolve_grid(const GridOptions& options, const ProblemSpec& problem,
                      const SchemeParams& params)
{
    GridSpec grid;
    grid.half_width = options.half_width;
    grid.pad = options.pad.value_or(3.0 * std::sqrt(problem.uncertainty.sigma_hi_sq *
                                                    problem.horizon));
    grid.dx = options.dx.value_or(params.time_step(problem.horizon));
    return grid;
}

double discount_factor(double b_val, double dt, const IncrementPair& inc)
{
    if (!(dt > 0.0)) {
        throw InvalidArgument("discount_factor: dt must be positive");
    }
    const double x = std::exp(b_val * inc.delta_b - 0.5 * b_val * b_val * inc.delta_qv);
    if (!std::isfinite(x)) {
        throw OverflowError("discount factor overflow for b=" + std::to_string(b_val));
    }
    return x;
}

namespace {

/// Per-thread workspace for evaluating the scheme at one grid point.
class PointKernel {
public:
    PointKernel(int depth, double dt, const UncertaintySpec& u)
        : depth_(depth),
          dt_(dt),
          u_(u),
          work_(depth),
          cached_(LatticeNodeGrid::node_count(depth)),
          yhat_(static_cast<std::size_t>(2 * depth + 1)),
          fk_(yhat_.size()),
          gk_(yhat_.size()),
          xb_(yhat_.size()),
          xq_(static_cast<std::size_t>(depth + 1)),
          qv_(static_cast<std::size_t>(depth + 1))
    {
        const double unit = u.sigma_hi_sq * dt / depth;
        h_ = std::sqrt(unit);
        for (int j = 0; j <= depth; ++j) {
            qv_[static_cast<std::size_t>(j)] = unit * j;
        }
    }

    struct Result {
        double value;
        int iterations;
    };

    Result evaluate(const Spline1D& next, double x, double t_n, const ProblemSpec& problem,
                    const SchemeParams& params)
    {
        const double t_next = t_n + dt_;
        const double th1 = params.theta1;
        const double th2 = params.theta2;

        if (problem.a && problem.a(t_n, x) != 0.0) {
            throw InvalidArgument("nonzero coefficient a is not supported by the solver");
        }
        const double b = problem.b ? problem.b(t_n, x) : 0.0;

        for (int k = -depth_; k <= depth_; ++k) {
            const auto idx = static_cast<std::size_t>(k + depth_);
            const double y = next(x + h_ * k);
            yhat_[idx] = y;
            fk_[idx] = (1.0 - th1) * problem.f(t_next, y) * dt_;
            gk_[idx] = th2 < 1.0 ? (1.0 - th2) * problem.g(t_next, y) : 0.0;
            xb_[idx] = b == 0.0 ? 1.0 : std::exp(b * h_ * k);
        }
        for (int j = 0; j <= depth_; ++j) {
            const auto jj = static_cast<std::size_t>(j);
            xq_[jj] = b == 0.0 ? 1.0 : std::exp(-0.5 * b * b * qv_[jj]);
        }

        // Explicit node payoff A(k, j), stored in the grid's row-major (j, p) layout.
        std::size_t pos = 0;
        for (int j = 0; j <= depth_; ++j) {
            const auto jj = static_cast<std::size_t>(j);
            for (int p = 0; p <= j; ++p, ++pos) {
                const auto idx = static_cast<std::size_t>(2 * p - j + depth_);
                const double disc = xb_[idx] * xq_[jj];
                const double a = disc * (yhat_[idx] + fk_[idx] + gk_[idx] * qv_[jj]);
                if (!std::isfinite(a)) {
                    throw StepError("non-finite node payoff", x, t_n, a, a);
                }
                cached_[pos] = a;
            }
        }

        const double explicit_part = expectation(0.0);
        auto map = [&](double y) {
            const double implicit_dt = th1 > 0.0 ? th1 * problem.f(t_n, y) * dt_ : 0.0;
            const double c = th2 > 0.0 ? th2 * problem.g(t_n, y) : 0.0;
            return implicit_dt + (c == 0.0 ? explicit_part : expectation(c));
        };
        try {
            const auto r = fixed_point(map, explicit_part, params.picard_tol, params.picard_max_iter);
            return {r.value, r.iterations};
        } catch (const DivergenceError& e) {
            throw StepError("Picard iteration did not converge", x, t_n, e.previous(), e.last());
        }
    }

private:
    // E[A + c d<B>] on the lattice.
    double expectation(double c)
    {
        auto terminal = work_.terminal();
        if (c == 0.0) {
            std::copy(cached_.begin(), cached_.end(), terminal.begin());
        } else {
            std::size_t pos = 0;
            for (int j = 0; j <= depth_; ++j) {
                const double add = c * qv_[static_cast<std::size_t>(j)];
                for (int p = 0; p <= j; ++p, ++pos) {
                    terminal[pos] = cached_[pos] + add;
                }
            }
        }
        work_.reset();
        return work_.collapse(u_);
    }

    int depth_;
    double dt_;
    UncertaintySpec u_;
    double h_ = 0.0;
    LatticeNodeGrid work_;
    std::vector<double> cached_;
    std::vector<double> yhat_, fk_, gk_, xb_, xq_, qv_;
};

unsigned worker_count(unsigned requested, std::size_t items)
{
    unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(items, 1)));
}

int require_depth(const SchemeParams& params)
{
    if (!params.lattice_depth) {
        throw InvalidArgument("step_backward needs a resolved lattice depth");
    }
    return *params.lattice_depth;
}

}  // namespace

StepOutput step_backward(std::span<const double> y_next, double t_n, const ProblemSpec& problem,
                         const GridSpec& grid, const SchemeParams& params)
{
    const int depth = require_depth(params);
    const double dt = params.time_step(problem.horizon);
    const std::vector<double> xs = grid.points();
    if (y_next.size() != xs.size()) {
        throw InvalidArgument("y_next does not match the grid size");
    }
    const Spline1D next(xs, y_next);

    StepOutput out;
    out.values.assign(xs.size(), 0.0);
    const std::size_t n = xs.size();
    const unsigned workers = worker_count(params.threads, n);

    std::vector<int> iters(workers, 0);
    std::vector<std::exception_ptr> errors(workers);

    auto run = [&](unsigned w) {
        const std::size_t begin = n * w / workers;
        const std::size_t end = n * (w + 1) / workers;
        try {
            PointKernel kernel(depth, dt, problem.uncertainty);
            for (std::size_t i = begin; i < end; ++i) {
                const auto r = kernel.evaluate(next, xs[i], t_n, problem, params);
                out.values[i] = r.value;
                iters[w] = std::max(iters[w], r.iterations);
            }
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };

    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (unsigned w = 1; w < workers; ++w) {
            pool.emplace_back(run, w);
        }
        run(0);
    }

    // Report the failure with the smallest grid index so errors do not depend on scheduling.
    for (unsigned w = 0; w < workers; ++w) {
        if (errors[w]) {
            std::rethrow_exception(errors[w]);
        }
    }
    out.picard_iters_max = *std::max_element(iters.begin(), iters.end());
    return out;
}

DepthSelection select_depth(const ProblemSpec& problem, const GridSpec& grid,
                            const SchemeParams& params, double t_probe, double tol_m)
{
    if (!(tol_m > 0.0)) {
        throw InvalidArgument("select_depth: tol_m must be positive");
    }
    problem.validate();
    grid.validate();
    params.validate();
    const double dt = params.time_step(problem.horizon);
    const std::vector<double> xs = grid.points();
    std::vector<double> ys(xs.size());
    std::transform(xs.begin(), xs.end(), ys.begin(), problem.terminal);
    const Spline1D terminal(xs, ys);

    auto probe = [&](int depth) {
        PointKernel kernel(depth, dt, problem.uncertainty);
        return kernel.evaluate(terminal, 0.0, t_probe, problem, params).value;
    };

    const DepthPolicy& policy = params.depth_policy;
    int m = policy.initial;
    double value = probe(m);
    double delta = std::numeric_limits<double>::infinity();
    while (2 * m <= policy.cap) {
        const double finer = probe(2 * m);
        delta = std::abs(finer - value);
        if (delta <= tol_m) {
            return {m, delta, false};
        }
        m *= 2;
        value = finer;
    }
    return {m, delta, true};
}

SolveResult solve(const ProblemSpec& problem, const GridSpec& grid, const SchemeParams& params)
{
    const auto started = std::chrono::steady_clock::now();
    problem.validate();
    grid.validate();
    params.validate();

    SolveResult result;
    const double dt = params.time_step(problem.horizon);
    SchemeParams resolved = params;
    if (!resolved.lattice_depth) {
        const auto sel = select_depth(problem, grid, params, problem.horizon - dt,
                                      params.depth_policy.tol);
        resolved.lattice_depth = sel.depth;
        if (sel.capped) {
            std::ostringstream os;
            os << "lattice depth capped at " << sel.depth << " with probe change "
               << sel.achieved_delta << " > " << params.depth_policy.tol;
            result.warnings.push_back(os.str());
        }
    }
    result.m_used = *resolved.lattice_depth;

    const double contraction = dt * problem.lipschitz_bound * (params.theta1 + params.theta2);
    if (contraction >= 1.0) {
        std::ostringstream os;
        os << "dt * L * (theta1 + theta2) = " << contraction
           << " >= 1; Picard iteration may not contract";
        result.warnings.push_back(os.str());
    }

    result.x_grid = grid.points();
    std::vector<double> y(result.x_grid.size());
    std::transform(result.x_grid.begin(), result.x_grid.end(), y.begin(), problem.terminal);

    for (int n = params.n_steps - 1; n >= 0; --n) {
        const double t_n = n * dt;
        try {
            auto step = step_backward(y, t_n, problem, grid, resolved);
            y = std::move(step.values);
            result.picard_iters_max = std::max(result.picard_iters_max, step.picard_iters_max);
        } catch (const StepError& e) {
            throw e.with_step(n);
        }
    }

    result.y0_at_origin = y[grid.origin_index()];
    result.y_grid_t0 = std::move(y);
    result.wall_time = std::chrono::steady_clock::now() - started;
    return result;
}

DepthSelection select_study_depth(const ProblemSpec& problem, const GridOptions& grid,
                                  const SchemeParams& params_base, int n_coarsest)
{
    SchemeParams params = params_base;
    params.n_steps = n_coarsest;
    params.validate();
    const GridSpec coarse = resolve_grid(grid, problem, params);
    return select_depth(problem, coarse, params,
                        problem.horizon - params.time_step(problem.horizon),
                        params.depth_policy.tol);
}

ErrorTable convergence_study(const ProblemSpec& problem, const GridOptions& grid,
                             const SchemeParams& params_base, std::span<const int> n_list)
{
    if (!problem.exact_y0) {
        throw ConfigurationError("convergence study needs a problem with a known exact Y0");
    }
    if (n_list.size() < 2) {
        throw InvalidArgument("convergence study needs at least two step counts");
    }
    for (std::size_t i = 1; i < n_list.size(); ++i) {
        if (n_list[i] <= n_list[i - 1]) {
            throw InvalidArgument("step counts must be strictly increasing");
        }
    }

    ErrorTable table;
    SchemeParams params = params_base;
    if (!params.lattice_depth) {
        const auto sel = select_study_depth(problem, grid, params, n_list.front());
        params.lattice_depth = sel.depth;
        if (sel.capped) {
            std::ostringstream os;
            os << "lattice depth capped at " << sel.depth << " with probe change "
               << sel.achieved_delta;
            table.warnings.push_back(os.str());
        }
    }

    std::vector<int> ns;
    std::vector<double> errors;
    for (int n : n_list) {
        params.n_steps = n;
        const GridSpec g = resolve_grid(grid, problem, params);
        const SolveResult r = solve(problem, g, params);
        ErrorRow row;
        row.n_steps = n;
        row.y0 = r.y0_at_origin;
        row.error = std::abs(r.y0_at_origin - *problem.exact_y0);
        row.runtime_ms = std::chrono::duration<double, std::milli>(r.wall_time).count();
        row.depth = r.m_used;
        row.picard_iters_max = r.picard_iters_max;
        row.dx = g.dx;
        table.rows.push_back(row);
        table.warnings.insert(table.warnings.end(), r.warnings.begin(), r.warnings.end());
        ns.push_back(n);
        errors.push_back(row.error);
    }

    const bool fittable = std::all_of(errors.begin(), errors.end(),
                                      [](double e) { return e > kNoiseFloor; });
    if (fittable) {
        table.rate = fit_rate(ns, errors);
    } else {
        table.below_noise_floor = true;
    }
    return table;
}

}  // namespace gbsde
