#pragma once

#include <stdexcept>
#include <string>

namespace cortical {

/// Bad input: violated preconditions, inconsistent shapes, malformed flags.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown, e.g. NaN/Inf produced by an unstable time step.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or malformed file contents (images, CRTX volumes).
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message)
{
  if (!condition) {
    throw ValidationError(message);
  }
}

} // namespace detail
} // namespace cortical
