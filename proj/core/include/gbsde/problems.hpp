#pragma once

#include "gbsde/scheme.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gbsde {

using ExactSolution = std::function<double(double t, double x)>;

struct ProblemCatalogEntry {
    std::string id;
    ProblemSpec spec;
    std::string description;
    std::optional<ExactSolution> exact_y;
};

/// Linear problem: -dY = -Y dt + Y/2 d<B> - Z dB - dK, Y_T = e^T sin(B_T).
/// Exact solution Y_t = e^t sin(B_t), so Y_0 = 0.
ProblemCatalogEntry example1(const UncertaintySpec& u = {0.25, 1.0});

/// Nonlinear problem: -dY = (Y^2 - Y) dt + (-Y^3 + 2.5 Y^2 - 1.5 Y + Z) d<B> - Z dB - dK,
/// Y_T = e^{T+B_T} / (1 + e^{T+B_T}). Exact solution is the logistic of t + B_t, so Y_0 = 0.5.
ProblemCatalogEntry example2(const UncertaintySpec& u = {0.25, 1.0});

/// Closed-form sanity problems with f = g = 0, b = 0:
///   "martingale" (phi = x), "constant" (phi = c) and "variance" (phi = x^2, Y_0 = sigma_hi_sq T).
std::vector<ProblemCatalogEntry> trivial_cases(const UncertaintySpec& u = {0.25, 1.0},
                                               double constant = 1.0);

/// Every built-in problem, addressable by id.
std::vector<ProblemCatalogEntry> problem_catalog(const UncertaintySpec& u = {0.25, 1.0});

/// Looks a problem up by id; returns nullopt for unknown ids.
std::optional<ProblemCatalogEntry> find_problem(const std::string& id,
                                                const UncertaintySpec& u = {0.25, 1.0});

}  // namespace gbsde
