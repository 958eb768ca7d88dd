#pragma once

#include <stdexcept>
#include <string>

namespace tnbody {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration detected before any work starts (impossible
/// reservations, bad core counts, malformed config values).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an API contract (push without reserve, pop underflow).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Thrown out of blocking circular-buffer calls once the owning pipeline
/// shuts down.
class ShutdownSignal : public Error {
 public:
  ShutdownSignal() : Error("circular buffer shut down") {}
};

/// Input data that cannot be processed (non-finite values, singular pairs).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Failure while running a computation (kernel failure, deadlock, blow-up).
class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace tnbody
