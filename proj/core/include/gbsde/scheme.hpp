#pragma once

#include "gbsde/lattice.hpp"
#include "gbsde/rate_fit.hpp"

#include <chrono>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gbsde {

using Driver = std::function<double(double t, double y)>;
using Coefficient = std::function<double(double t, double x)>;
using TerminalFunction = std::function<double(double x)>;

/// Backward SDE driven by a one-dimensional G-Brownian motion B:
///
///   Y_t = phi(B_T) + int_t^T (f(s, Y_s) + a_s Z_s) ds + int_t^T (g(s, Y_s) + b_s Z_s) d<B>_s
///         - int_t^T Z_s dB_s - (K_T - K_t).
///
/// Only a = 0 is supported by the solver; a non-empty `a` is sampled at every (t_n, x_i)
/// and any nonzero value is rejected.
struct ProblemSpec {
    Driver f;             // dt driver
    Driver g;             // d<B> driver
    Coefficient a;        // Z coefficient on dt, must vanish (empty means 0)
    Coefficient b;        // Z coefficient on d<B> (empty means 0)
    TerminalFunction terminal;
    double horizon = 1.0;
    UncertaintySpec uncertainty;
    std::optional<double> exact_y0;
    double lipschitz_bound = 1.0;

    void validate() const;
};

/// Uniform spatial grid on [-(half_width + pad), half_width + pad] through x = 0.
struct GridSpec {
    double half_width = 3.0;
    double dx = 0.0;
    double pad = 0.0;

    void validate() const;
    std::vector<double> points() const;
    /// Index of x = 0 in points().
    std::size_t origin_index() const;
};

/// Settings for choosing the lattice depth automatically.
struct DepthPolicy {
    int initial = 8;    // first candidate M0; candidates are M0, 2 M0, 4 M0, ...
    int cap = 128;      // largest candidate tried
    double tol = 1e-5;  // accepted change of the probe value between consecutive candidates
};

struct SchemeParams {
    double theta1 = 0.0;
    double theta2 = 0.0;
    int n_steps = 8;
    std::optional<int> lattice_depth;  // empty: choose with select_depth
    DepthPolicy depth_policy;
    double picard_tol = 1e-12;
    int picard_max_iter = 100;
    unsigned threads = 0;  // worker threads for the grid sweep; 0 = hardware concurrency

    void validate() const;
    double time_step(double horizon) const { return horizon / n_steps; }
};

/// Optional overrides for the spatial grid; anything left empty takes the default:
/// pad = 3 sqrt(sigma_hi_sq T), dx = T / N.
struct GridOptions {
    double half_width = 3.0;
    std::optional<double> dx;
    std::optional<double> pad;
};

GridSpec resolve_grid(const GridOptions& options, const ProblemSpec& problem,
                      const SchemeParams& params);

struct SolveResult {
    double y0_at_origin = 0.0;
    std::vector<double> x_grid;
    std::vector<double> y_grid_t0;
    int picard_iters_max = 0;
    std::chrono::duration<double> wall_time{0.0};
    int m_used = 0;
    std::vector<std::string> warnings;
};

/// X = exp(b dB - b^2 d<B> / 2), the one-step Euler discount factor for a = 0.
/// Throws OverflowError if the result is not finite.
double discount_factor(double b_val, double dt, const IncrementPair& inc);

struct StepOutput {
    std::vector<double> values;
    int picard_iters_max = 0;
};

/// One step of the fully discrete theta-scheme, from the grid values at t_n + dt to t_n.
///
/// For every grid point x_i the lattice of depth params.lattice_depth (which must be set)
/// is seeded with the explicit part
///   A(k, j) = X (Yhat + (1 - theta1) f(t_{n+1}, Yhat) dt + (1 - theta2) g(t_{n+1}, Yhat) d<B>)
/// where Yhat is the spline of y_next at x_i + dB. The implicit value then solves
///   y = theta1 f(t_n, y) dt + E[A + theta2 g(t_n, y) d<B>]
/// by Picard iteration started from E[A].
///
/// Throws StepError if Picard iteration fails or a node value is not finite at some x_i.
StepOutput step_backward(std::span<const double> y_next, double t_n, const ProblemSpec& problem,
                         const GridSpec& grid, const SchemeParams& params);

/// Runs the scheme from phi at t_N = T down to t_0 = 0.
SolveResult solve(const ProblemSpec& problem, const GridSpec& grid, const SchemeParams& params);

struct DepthSelection {
    int depth = 0;
    double achieved_delta = 0.0;  // change of the probe value at the accepted depth
    bool capped = false;          // true if the cap was reached without meeting tol_m
};

/// Smallest depth in {M0, 2 M0, ...} (up to the policy cap) whose one-step value at x = 0,
/// stepping from the terminal data at t_probe + dt to t_probe, differs by at most tol_m
/// from the value at twice that depth.
DepthSelection select_depth(const ProblemSpec& problem, const GridSpec& grid,
                            const SchemeParams& params, double t_probe, double tol_m);

struct ErrorRow {
    int n_steps = 0;
    double y0 = 0.0;
    double error = 0.0;
    double runtime_ms = 0.0;
    int depth = 0;
    int picard_iters_max = 0;
    double dx = 0.0;
};

struct ErrorTable {
    std::vector<ErrorRow> rows;
    std::optional<RateFit> rate;
    bool below_noise_floor = false;  // set when errors are too small to fit a rate
    std::vector<std::string> warnings;
};

/// Depth shared by every row of a study: select_depth at the coarsest N, probing at t = T - dt.
DepthSelection select_study_depth(const ProblemSpec& problem, const GridOptions& grid,
                                  const SchemeParams& params_base, int n_coarsest);

/// Errors below this are treated as exact and make the study skip the rate fit.
inline constexpr double kNoiseFloor = 1e-9;

/// Solves once per N in n_list and fits the convergence rate of |Y_0 - Y^0| at (0, 0).
///
/// With params_base.lattice_depth empty the depth is selected once, at the coarsest N, and
/// reused for every row so that all rows share the same lattice approximation.
/// Throws ConfigurationError if the problem has no exact_y0.
ErrorTable convergence_study(const ProblemSpec& problem, const GridOptions& grid,
                             const SchemeParams& params_base, std::span<const int> n_list);

}  // namespace gbsde
