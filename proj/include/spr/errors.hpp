#pragma once

#include <stdexcept>
#include <string>

namespace spr {

/// Invalid or unparseable configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A referenced file or directory does not exist (CLI exit code 3).
struct MissingInputError : std::runtime_error {
  explicit MissingInputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: solver breakdown, non-finite values (CLI exit code 4).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Conjugate gradient hit a non-positive curvature direction.
struct CgBreakdown : NumericalError {
  explicit CgBreakdown(const std::string& msg) : NumericalError(msg) {}
};

}  // namespace spr
