#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lumen {

/// Base class for all lumen errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Contradictory or out-of-range configuration values.
struct InvalidConfig : Error {
    using Error::Error;
};

/// No DC path to an LED terminal; the node voltage is undefined.
struct FloatingNode : Error {
    using Error::Error;
};

/// Malformed device-library document. `path` points at the offending node.
struct SchemaError : Error {
    SchemaError(std::string path_, const std::string& message)
        : Error(path_ + ": " + message), path(std::move(path_)) {}
    std::string path;
};

/// Well-formed document whose values violate a device invariant.
struct InvariantError : Error {
    using Error::Error;
};

struct RateExceedsModulatorBandwidth : Error {
    using Error::Error;
};

struct PayloadTooLong : Error {
    using Error::Error;
};

/// HH or LL where a Manchester pair was expected.
struct InvalidSymbolPair : Error {
    explicit InvalidSymbolPair(std::size_t index_)
        : Error("invalid Manchester pair at index " + std::to_string(index_)),
          index(index_) {}
    std::size_t index;
};

/// Receiver could not lock onto the preamble.
struct NoPreamble : Error {
    using Error::Error;
};

struct UnknownMnemonic : Error {
    using Error::Error;
};

struct UnknownLabel : Error {
    using Error::Error;
};

/// Operand out of range for its encoding field.
struct RangeError : Error {
    using Error::Error;
};

struct TickLimitExceeded : Error {
    using Error::Error;
};

/// Snapshots compared at different ticks.
struct TickMismatch : Error {
    using Error::Error;
};

struct EmptyBaseline : Error {
    using Error::Error;
};

}  // namespace lumen
