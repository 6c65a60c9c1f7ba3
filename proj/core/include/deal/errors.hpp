#pragma once

#include <stdexcept>
#include <string>

namespace deal {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Caller violated a documented precondition (bad parameter, wrong sizes).
class UsageError : public Error {
public:
  using Error::Error;
};

/// Input data is malformed: non-finite entries, missing trace fields.
class DataError : public Error {
public:
  using Error::Error;
};

/// A numerical procedure failed (non-convergence, non-finite probe).
class NumericalError : public Error {
public:
  using Error::Error;
};

/// The problem itself is outside the method's domain (e.g. unbounded below).
class DomainError : public Error {
public:
  using Error::Error;
};

/// An oracle the operation needs is not provided by the objective.
class CapabilityError : public Error {
public:
  using Error::Error;
};

}  // namespace deal
