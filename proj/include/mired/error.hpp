#pragma once

#include <stdexcept>
#include <string>

namespace mired {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not fit the operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// An argument is outside its documented domain.
class ValueError : public Error {
 public:
  using Error::Error;
};

// A NaN/Inf or an impossible intermediate showed up.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mired
