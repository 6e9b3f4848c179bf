#pragma once

#include <stdexcept>
#include <string>

namespace sgn {

// Invalid configuration or parameter values (CLI exit code 1).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A run could not start, e.g. non-finite residual at x0 (exit code 2).
class RunFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable or unwritable files, malformed input files (exit code 3).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sgn
