#pragma once

#include <stdexcept>
#include <string>

namespace llf {

// Base of every exception raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

// Operand shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "dimension"; }
};

// Invalid configuration: bad flags, missing derivative bundles, bad params.
class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

// C V C^T + Sigma could not be factored even after regularization.
class SingularInnovationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "singular_innovation"; }
};

// Non-finite or inadmissible intermediate values (moments, paths, expm).
class DivergenceError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "divergence"; }
};

// File could not be opened, created or written.
class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

}  // namespace llf
