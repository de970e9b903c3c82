#pragma once

#include <stdexcept>
#include <string>

namespace discoder {

/// Caller passed data that violates an operation's precondition.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Operation invoked in the wrong object state (e.g. backward without a recorded forward).
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Malformed file contents.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite values appeared during optimization.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid configuration; `field` names the offending key.
struct ConfigError : std::invalid_argument {
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace discoder
