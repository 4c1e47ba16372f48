#pragma once

#include <stdexcept>
#include <string>

namespace gbsde {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition or configuration value is out of range.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The uncertainty interval does not describe a valid pair of jump probabilities.
class InvalidUncertainty : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// A payoff produced a non-finite value at a terminal lattice node.
class EvaluationError : public Error {
public:
    EvaluationError(int k, int j, double value);

    int k() const noexcept { return k_; }
    int j() const noexcept { return j_; }
    double value() const noexcept { return value_; }

private:
    int k_;
    int j_;
    double value_;
};

/// The brute-force evaluator was asked for a tree deeper than it supports.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Fixed-point iteration did not settle within its iteration budget.
class DivergenceError : public Error {
public:
    DivergenceError(double previous, double last, int iterations);

    double previous() const noexcept { return previous_; }
    double last() const noexcept { return last_; }
    int iterations() const noexcept { return iterations_; }

private:
    double previous_;
    double last_;
    int iterations_;
};

/// The discount factor exp(b dB - b^2 d<B>/2) left the representable range.
class OverflowError : public Error {
public:
    using Error::Error;
};

/// A backward step failed at a specific grid point.
///
/// `step()` is the time index n of the level being computed; it is -1 when the
/// failure happened outside of a full solve (a bare step_backward call).
class StepError : public Error {
public:
    StepError(const std::string& what, double x, double t, double previous, double last,
              int step = -1);

    double x() const noexcept { return x_; }
    double t() const noexcept { return t_; }
    double previous() const noexcept { return previous_; }
    double last() const noexcept { return last_; }
    int step() const noexcept { return step_; }

    StepError with_step(int n) const;

private:
    double x_;
    double t_;
    double previous_;
    double last_;
    int step_;
};

/// A study was requested that the problem cannot support (e.g. no exact solution).
class ConfigurationError : public Error {
public:
    using Error::Error;
};

}  // namespace gbsde
