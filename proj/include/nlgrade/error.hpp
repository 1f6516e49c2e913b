#pragma once

#include <stdexcept>
#include <string>

namespace nlgrade {

/// Bad input: parameter out of range, inconsistent geometry, malformed config.
/// The CLI maps this to exit status 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure during a run (solver breakdown, NaN, dual bisection).
/// The CLI maps this to exit status 1.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace nlgrade
