#pragma once

#include <stdexcept>
#include <string>

namespace nqkd {

/// Raised when an argument violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numeric routine cannot produce a result (no root in a
/// bracket, inconsistent estimates, two evaluation routes disagreeing).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nqkd
