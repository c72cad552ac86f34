#pragma once

#include <stdexcept>
#include <string>

namespace gia {

// Failure classes used throughout the library. Callers that want to recover
// can catch a specific class; everything derives from std::runtime_error so a
// blanket catch still works at the CLI boundary.

// Shapes do not conform (matmul inner dims, elementwise mismatch, ...).
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Value outside the mathematical domain of an operation (empty tensor, ...).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// NaN/Inf where a finite value is required.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An API contract was violated (non-scalar loss passed to backward, ...).
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration (unknown parameter group, bad encoder config, ...).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid input data (score out of declared range, out-of-vocab id, ...).
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed file contents.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace gia
