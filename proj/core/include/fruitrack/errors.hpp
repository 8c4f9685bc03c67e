#pragma once

#include <stdexcept>
#include <string>

namespace fruitrack {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user-supplied configuration (spec files, CLI flags, parameter ranges).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Missing or malformed on-disk data. Messages carry file (and line) context.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition (frame mismatch, wrong cube frame).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Depth outside the accepted [min_depth, max_depth] window.
class DepthOutOfRange : public Error {
 public:
  using Error::Error;
};

}  // namespace fruitrack
