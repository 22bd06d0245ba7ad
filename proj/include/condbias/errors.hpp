#pragma once

#include <stdexcept>
#include <string>

namespace condbias {

/// Malformed or unusable input data (bad CSV cell, unknown column, schema problems).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller violated an API contract (dimension mismatch, odd forest size for a half strategy, ...).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An internal invariant did not hold. Indicates a bug, never bad input.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace condbias
