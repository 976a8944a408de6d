#pragma once

#include <stdexcept>
#include <string>

namespace magflow {

// Base of every error raised by the library.  `kind()` is the short tag used
// in machine-readable error reports.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

// A point or curve left the chart domain (y <= 0 or overflow).
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};

// Invalid model or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

// A precondition of an operation did not hold (e.g. vectors not asymptotic).
class PreconditionError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "precondition"; }
};

// Iterative numerics failed; carries the best residual reached.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  explicit NumericError(const std::string& what) : Error(what), residual_(0.0) {}
  const char* kind() const noexcept override { return "numeric"; }
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace magflow
