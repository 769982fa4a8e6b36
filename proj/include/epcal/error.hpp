#pragma once

#include <stdexcept>
#include <string>

namespace epcal {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A matrix handed to matrix_to_rodrigues is not a proper rotation.
class InvalidRotation : public Error {
 public:
  using Error::Error;
};

/// Value outside the domain where an inverse is defined.
class RangeError : public Error {
 public:
  using Error::Error;
};

class DegenerateConfiguration : public Error {
 public:
  using Error::Error;
};

/// Iterative procedure failed to converge or produced non-finite values.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// File format errors. Messages carry the file/field context.
class ParseError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class FileError : public Error {
 public:
  using Error::Error;
};

}  // namespace epcal
