#pragma once

#include <stdexcept>
#include <string>

namespace coreplan {

// Bad user input: out-of-range parameter, malformed file, unusable flag combo.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Input file could not be parsed; message names the offending line.
class ParseError : public ValidationError {
public:
    explicit ParseError(const std::string& what) : ValidationError(what) {}
};

// The deadline admits no feasible plan (ell < 1 or deadline <= t_max).
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

// The analytic core lower bound exceeds the machine's available cores.
class ResourceError : public std::runtime_error {
public:
    explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

// Iterative method failed to converge; carries the last residual.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), last_residual(residual) {}
    double last_residual;
};

}  // namespace coreplan
