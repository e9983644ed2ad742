#pragma once

#include <stdexcept>
#include <string>

namespace bandsel {

/// Invalid user-supplied configuration (bad k, negative lambda, ...).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor or sample shapes that do not line up.
class DimensionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data: cube files, label files, out-of-range labels.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// NaN/Inf appearing in a loss or gradient.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An operation invoked out of order, e.g. backward before forward.
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace bandsel
