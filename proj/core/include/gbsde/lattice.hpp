#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace gbsde {

/// Variance-uncertainty interval [sigma_lo_sq, sigma_hi_sq] of a G-Brownian motion.
///
/// One lattice sub-step jumps by +-sqrt(sigma_hi_sq * dt / M) with total probability
/// q = sigma^2 / sigma_hi_sq, so the per-step variance is either sigma_lo_sq * dt / M or
/// sigma_hi_sq * dt / M.
struct UncertaintySpec {
    double sigma_lo_sq = 1.0;
    double sigma_hi_sq = 1.0;

    double q_lo() const noexcept { return sigma_lo_sq / sigma_hi_sq; }
    double q_hi() const noexcept { return 1.0; }
    bool degenerate() const noexcept { return sigma_lo_sq == sigma_hi_sq; }

    /// Throws InvalidUncertainty unless 0 < sigma_lo_sq <= sigma_hi_sq (both finite).
    void validate() const;
};

/// Increment of the pair (B, <B>) over one time step.
struct IncrementPair {
    double delta_b = 0.0;
    double delta_qv = 0.0;
};

using Payoff = std::function<double(const IncrementPair&)>;

/// Terminal increment encoded by lattice node (k, j) after `depth` sub-steps of a step of
/// length dt: dB = sqrt(sigma_hi_sq * dt / depth) * k, d<B> = sigma_hi_sq * dt / depth * j.
IncrementPair node_increment(int k, int j, double dt, int depth, const UncertaintySpec& u);

/// Value arrays of the trinomial uncertainty lattice.
///
/// Level m holds the nodes {(k, j) : 0 <= j <= m, |k| <= j, k = j mod 2}, where k is the
/// walk offset and j the number of jumps taken so far. Row j is stored contiguously, indexed
/// by p = (k + j) / 2 in [0, j]. Rolling back one level is done in place, so a single
/// triangular buffer of size (M + 1)(M + 2) / 2 serves the whole sweep.
class LatticeNodeGrid {
public:
    explicit LatticeNodeGrid(int depth);

    int depth() const noexcept { return depth_; }
    int level() const noexcept { return level_; }

    /// Number of nodes at level m.
    static std::size_t node_count(int m) noexcept
    {
        return static_cast<std::size_t>(m + 1) * static_cast<std::size_t>(m + 2) / 2;
    }

    /// Returns to level `depth()` without touching the stored values.
    void reset() noexcept { level_ = depth_; }

    /// Row j of the current level (j + 1 entries, indexed by p).
    std::span<double> row(int j) noexcept
    {
        return {values_.data() + row_offset(j), static_cast<std::size_t>(j) + 1};
    }
    std::span<const double> row(int j) const noexcept
    {
        return {values_.data() + row_offset(j), static_cast<std::size_t>(j) + 1};
    }

    /// All nodes of the terminal level in row-major (j, p) order.
    std::span<double> terminal() noexcept { return {values_.data(), node_count(depth_)}; }
    std::span<const double> terminal() const noexcept
    {
        return {values_.data(), node_count(depth_)};
    }

    double& at(int k, int j) noexcept { return values_[index(k, j)]; }
    double at(int k, int j) const noexcept { return values_[index(k, j)]; }

    /// Evaluates `payoff` at every terminal node and resets the level to depth().
    /// Throws EvaluationError on the first non-finite value.
    void seed(const Payoff& payoff, double dt, const UncertaintySpec& u);

    /// Combines the current level into the previous one:
    ///   v(k, j) <- max_q [ q/2 (v(k+1, j+1) + v(k-1, j+1)) + (1 - q) v(k, j) ],
    /// q ranging over {q_lo, q_hi}. Requires level() > 0.
    void step_back(const UncertaintySpec& u) noexcept;

    /// Runs step_back down to level 0 and returns the root value.
    double collapse(const UncertaintySpec& u) noexcept;

private:
    static std::size_t row_offset(int j) noexcept
    {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(j + 1) / 2;
    }
    static std::size_t index(int k, int j) noexcept
    {
        return row_offset(j) + static_cast<std::size_t>((k + j) / 2);
    }

    int depth_;
    int level_;
    std::vector<double> values_;
};

/// Sublinear expectation of payoff(dB, d<B>) over one step of length dt, approximated by
/// the depth-M trinomial lattice with adapted choice of the jump probability at every node.
double lattice_expectation(const Payoff& payoff, double dt, int depth, const UncertaintySpec& u);

/// Spatial points reached by the depth-M walk started at x0: (k, x0 + sqrt(sigma_hi_sq dt/M) k)
/// for k = -M..M, in increasing order.
std::vector<std::pair<int, double>> lattice_endpoints(double x0, double dt, int depth,
                                                      double sigma_hi_sq = 1.0);

}  // namespace gbsde
