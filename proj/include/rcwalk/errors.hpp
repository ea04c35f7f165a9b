#pragma once

#include <stdexcept>
#include <string>

namespace rcwalk {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed config, out-of-range parameter, invalid cut.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace rcwalk
