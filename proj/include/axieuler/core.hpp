#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <numbers>

namespace axieuler {

inline constexpr double pi = std::numbers::pi;

/// Raised when caller-supplied parameters violate a precondition.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a point query falls outside the computational domain.
class DomainError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Numerical failure during a run (CFL violation, singular system, ...).
class RuntimeFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace axieuler
