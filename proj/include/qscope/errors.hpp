#pragma once

#include <stdexcept>
#include <string>

namespace qscope {

/// Invalid user input: bad configuration values, violated preconditions.
/// The CLI maps this to exit status 2.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Runtime numerical failure (NaN, positivity excursion, stability guard).
/// The CLI maps this to exit status 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace qscope
