#pragma once

#include <stdexcept>
#include <string>

namespace stgt {

/// Operand shapes do not conform (matmul inner dims, elementwise, ...).
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure: NaN input, non-convergence, overflow.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller violated an API contract (empty input, single-class labels, ...).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Object used in the wrong lifecycle state (apply before fit, double backward).
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Malformed domain values (coordinates out of range, negative counts).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Bad or inconsistent run configuration (empty split, unknown config key).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem / serialization failure; message carries the offending path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace stgt
