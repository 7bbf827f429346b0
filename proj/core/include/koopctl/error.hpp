#pragma once

#include <stdexcept>
#include <string>

namespace koopctl {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument or violated precondition (wrong sizes, empty ranges, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A numerical routine could not deliver a result (singular solve,
// eigensolver non-convergence, repeated roots, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Missing, truncated or ill-formed artifact / configuration input.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace koopctl
