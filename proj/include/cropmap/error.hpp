#pragma once

#include <stdexcept>
#include <string>

namespace cropmap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes or a non-finite value escaping a primitive.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed input files: label tables, containers, GeoJSON, model files.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A domain invariant was violated by caller-provided data.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace cropmap
