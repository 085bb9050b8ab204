#pragma once

#include <stdexcept>
#include <string>

namespace volfn {

// Invalid tuning parameters, dimension mismatches, violated preconditions.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// File and serialization failures.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// NaN/Inf propagation, failed iterations, impossible numerical states.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace volfn
