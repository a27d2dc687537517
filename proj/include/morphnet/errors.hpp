#pragma once

#include <stdexcept>
#include <string>

namespace morphnet {

/// Shapes that do not chain (vector lengths, matrix dims, layer widths).
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Values outside an operation's domain (NaN/inf, beta <= 0, bad config).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed files and serialized documents.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace morphnet
