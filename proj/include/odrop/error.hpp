#pragma once

#include <stdexcept>
#include <string>

namespace odrop {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files (CSV, JSON documents).
class ParseError : public Error {
 public:
  using Error::Error;
};

// A precondition on the arguments of an operation does not hold.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Column sets or shapes disagree between two objects that must share them.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Training diverged or a matrix could not be regularized.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A metric is undefined on its input (e.g. AUROC with a single class).
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace odrop
