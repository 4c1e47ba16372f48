#pragma once

#include "gbsde/lattice.hpp"

namespace gbsde {

/// Largest tree depth the brute-force evaluator accepts (3^6 = 729 leaf histories).
inline constexpr int kOracleMaxDepth = 6;

/// Exhaustive maximisation over adapted volatility policies on the unmerged depth-M tree.
///
/// Every history gets its own choice of q, so no state is shared between paths that end up
/// at the same (k, j). This is deliberately independent of LatticeNodeGrid and is used to
/// check it. Throws CapacityError for depth > kOracleMaxDepth.
double oracle_expectation(const Payoff& payoff, double dt, int depth, const UncertaintySpec& u);

}  // namespace gbsde
