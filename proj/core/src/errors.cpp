#include "gbsde/errors.hpp"

#include <sstream>

namespace gbsde {

namespace {

std::string node_message(int k, int j, double value)
{
    std::ostringstream os;
    os << "payoff is not finite at lattice node (k=" << k << ", j=" << j << "): " << value;
    return os.str();
}

std::string divergence_message(double previous, double last, int iterations)
{
    std::ostringstream os;
    os.precision(17);
    os << "fixed-point iteration did not converge after " << iterations
       << " iterations (last iterates " << previous << ", " << last << ")";
    return os.str();
}

std::string step_message(const std::string& what, double x, double t, int step)
{
    std::ostringstream os;
    os.precision(17);
    os << what << " at x=" << x << ", t=" << t;
    if (step >= 0) {
        os << " (n=" << step << ")";
    }
    return os.str();
}

}  // namespace

EvaluationError::EvaluationError(int k, int j, double value)
    : Error(node_message(k, j, value)), k_(k), j_(j), value_(value)
{}

DivergenceError::DivergenceError(double previous, double last, int iterations)
    : Error(divergence_message(previous, last, iterations)),
      previous_(previous),
      last_(last),
      iterations_(iterations)
{}

StepError::StepError(const std::string& what, double x, double t, double previous, double last,
                     int step)
    : Error(step_message(what, x, t, step)),
      x_(x),
      t_(t),
      previous_(previous),
      last_(last),
      step_(step)
{}

StepError StepError::with_step(int n) const
{
    // Strip the location suffix so it is not repeated.
    std::string base = what();
    if (auto pos = base.rfind(" at x="); pos != std::string::npos) {
        base.erase(pos);
    }
    return StepError(base, x_, t_, previous_, last_, n);
}

}  // namespace gbsde
