#pragma once

#include <stdexcept>
#include <string>

namespace qtomo {

/// Raised when an argument violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Error-row detection flagged every candidate row; the sinogram is unusable.
class DetectionFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The instance exceeds what an exhaustive solver will enumerate.
class TooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unreadable input file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qtomo
