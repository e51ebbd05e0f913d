#pragma once

#include <stdexcept>
#include <string>

namespace unpiv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class TooSmall : public Error {
 public:
  using Error::Error;
};

class EstimationFailed : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable file content (bad magic, truncated payload, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace unpiv
