#pragma once

#include <stdexcept>
#include <string>

namespace bluq {

/// Invalid parameters, configuration, or input documents. CLI exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Runtime numerical failures: divergence, factorization, sampling overflow.
/// CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Training blow-up. Carries the last finite state seen by the optimizer.
class TrainingDivergence : public NumericalError {
public:
    TrainingDivergence(const std::string& what, int last_iteration, double last_finite_loss)
        : NumericalError(what), last_iteration(last_iteration), last_finite_loss(last_finite_loss) {}
    int last_iteration;
    double last_finite_loss;
};

} // namespace bluq
