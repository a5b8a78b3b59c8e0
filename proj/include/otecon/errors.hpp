#pragma once

#include <stdexcept>
#include <string>

namespace otecon {

// Base of every error thrown by the library. The CLI maps subclasses onto
// exit codes, so each failure mode gets its own type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class NotPsdError : public Error {
 public:
  using Error::Error;
};

class NotInvertibleError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class ResourceError : public Error {
 public:
  using Error::Error;
};

class SolverStallError : public Error {
 public:
  using Error::Error;
};

class NonAssignmentError : public Error {
 public:
  using Error::Error;
};

class NonIdentificationError : public Error {
 public:
  using Error::Error;
};

class StepSizeError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public Error {
 public:
  using Error::Error;
};

}  // namespace otecon
