#pragma once

#include <stdexcept>
#include <string>

namespace avgerr {

/// Raised when arguments violate an operation's preconditions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A series whose sample variance is exactly zero where a positive variance is required.
class DegenerateSeries : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Raised when a numerical procedure cannot produce a usable result.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace avgerr
