#pragma once

#include <stdexcept>
#include <string>

namespace mlfe {

/// Invalid input or configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure could not produce a trustworthy result (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotCoercive : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class MaxIterExceeded : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonPositiveIterate : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace mlfe
