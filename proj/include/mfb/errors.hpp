#pragma once

#include <stdexcept>
#include <string>

namespace mfb {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad user-supplied configuration: missing handles, malformed files,
/// inconsistent options. CLI exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

/// Dimension or shape mismatch between data and a consumer.
struct ShapeError : Error {
  using Error::Error;
};

/// Input outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

/// Numerical failure at run time: training divergence, integrator
/// breakdown, degenerate statistics. CLI exit code 3.
struct NumericError : Error {
  using Error::Error;
};

/// Requested an operation the engine does not support.
struct CapabilityError : Error {
  using Error::Error;
};

}  // namespace mfb
