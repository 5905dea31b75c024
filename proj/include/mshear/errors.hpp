#ifndef MSHEAR_ERRORS_HPP
#define MSHEAR_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace mshear {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a type or problem invariant (non-SPD, trace, determinant, shape).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// An inner iterative method (eigensolver, momentum inversion) did not converge.
class IterationFailure : public Error {
public:
    using Error::Error;
};

/// The ODE integrator lost positive definiteness of the state.
class StepFailure : public Error {
public:
    StepFailure(const std::string& what, double time) : Error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// The shooting outer loop ran out of iterations. Carries the best iterate seen.
class ConvergenceFailure : public Error {
public:
    ConvergenceFailure(const std::string& what, double best_residual, std::vector<double> best_iterate)
        : Error(what), best_residual_(best_residual), best_iterate_(std::move(best_iterate)) {}

    double best_residual() const noexcept { return best_residual_; }
    const std::vector<double>& best_iterate() const noexcept { return best_iterate_; }

private:
    double best_residual_;
    std::vector<double> best_iterate_;
};

}  // namespace mshear

#endif  // MSHEAR_ERRORS_HPP
