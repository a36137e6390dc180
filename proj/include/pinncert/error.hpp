#pragma once

#include <stdexcept>
#include <string>

namespace pinncert {

/// Bad input: mismatched dimensions, invalid configuration, unknown preset.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// NaN/Inf or a failed solve encountered during a computation.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ConfigError(message);
}

}  // namespace pinncert
