#pragma once

#include <stdexcept>
#include <string>

namespace epu {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration or usage: unknown keys, unresolved resources, bad flags.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data that violates a precondition (unreadable file, bad record, degenerate sample).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A looked-up key (word, document id) is absent.
class NotFoundError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace epu
