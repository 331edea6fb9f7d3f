#pragma once

#include <stdexcept>
#include <string>

namespace sphconv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input lies outside the domain where an operation is defined
/// (e.g. a point on the removed half-equator).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative method hit its iteration cap or lost its bracket.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A sampled convexity bound came out nonpositive.
class CertificationError : public Error {
 public:
  using Error::Error;
};

/// Neighbour average vanished, so the sphere projection is undefined.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class ShrinkError : public Error {
 public:
  using Error::Error;
};

class SlopeBlowupError : public Error {
 public:
  using Error::Error;
};

}  // namespace sphconv
