#pragma once

#include <stdexcept>
#include <string>

namespace drfg {

// Base of all errors thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unreadable, corrupt, or undecodable files.
struct IoError : Error {
    using Error::Error;
};

// Tensor / vector dimension mismatches. Messages report the actual dims.
struct ShapeError : Error {
    using Error::Error;
};

// Invalid registry entries, config documents, or option combinations.
struct ConfigError : Error {
    using Error::Error;
};

// Semantically invalid inputs (empty sets, out-of-range labels, ...).
struct InvalidInput : Error {
    using Error::Error;
};

// API misuse, e.g. a backward pass fed a cache from a different network.
struct ContractViolation : Error {
    using Error::Error;
};

} // namespace drfg
