#pragma once

#include <stdexcept>
#include <string>

namespace emot {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A Gibbs-kernel exponent exceeded the overflow guard; the iterate is
/// numerically meaningless beyond this point.
class Overflow : public Error {
 public:
  using Error::Error;
};

/// The scalar root bracket could not be expanded to a sign change.
class BracketFailure : public Error {
 public:
  using Error::Error;
};

/// A plan puts mass where the reference measure has none.
class NotAbsolutelyContinuous : public Error {
 public:
  using Error::Error;
};

/// A histogram axis ended up with no populated cells.
class DegenerateHistogram : public Error {
 public:
  using Error::Error;
};

/// Call prices admit butterfly arbitrage (negative second difference).
class NonConvexPrices : public Error {
 public:
  using Error::Error;
};

/// Too few usable trace points to fit a convergence rate.
class InsufficientTrace : public Error {
 public:
  using Error::Error;
};

/// An iterative routine hit its iteration cap before reaching tolerance.
class NoConvergence : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration or input file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem / serialization failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace emot
