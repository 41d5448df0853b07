#pragma once

#include <stdexcept>
#include <string>

namespace kanneal {

/// Invalid arguments or configuration supplied by the caller.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The requested operation is not provided by this object (e.g. a Hessian).
class CapabilityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// An object could not be built with the requested parameters.
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A non-finite value appeared during stepping.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Quadrature could not reach the requested accuracy on the given grid.
class AccuracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too few usable points to fit a rate.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kanneal
