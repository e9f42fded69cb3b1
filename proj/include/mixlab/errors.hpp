#pragma once

#include <stdexcept>
#include <string>

namespace mixlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violated by the caller (bad alpha, empty class, k out of range).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Malformed on-disk data.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Quantity undefined for the given input (zero norm denominators, zero
// variance, zero net epoch motion).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

}  // namespace mixlab
