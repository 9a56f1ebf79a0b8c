#pragma once

#include <stdexcept>
#include <string>

namespace nicon {

// Base of every exception thrown by the library. The CLI maps the three
// categories below onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments or preconditions violated by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed, missing or inconsistent input data (files, masks, meshes).
class DataError : public Error {
 public:
  using Error::Error;
};

// NaN, breakdown or non-convergence inside a numerical kernel.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace nicon
