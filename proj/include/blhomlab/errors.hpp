#pragma once

#include <stdexcept>
#include <string>

namespace blhomlab {

/// Bad arguments to an operation (wrong frame type, empty vector, ...).
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// An iterative solve stopped at its iteration cap; carries the last residual.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual, int iterations)
        : std::runtime_error(what + " (residual=" + std::to_string(residual) +
                             " after " + std::to_string(iterations) + " iterations)"),
          residual(residual), iterations(iterations) {}
    double residual;
    int iterations;
};

/// Malformed or rejected experiment configuration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace blhomlab
