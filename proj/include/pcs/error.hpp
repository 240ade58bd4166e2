#pragma once

#include <stdexcept>
#include <string>

namespace pcs {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (bad shapes, bad labels, bad CSV).
struct InvalidInputError : Error {
  using Error::Error;
};

/// A group has too few observations for the requested statistic.
struct InsufficientDataError : Error {
  using Error::Error;
};

/// A sample variance of zero where a positive one is required.
struct DegenerateVarianceError : Error {
  using Error::Error;
};

/// The penalized problem has no unique minimizer (sum of penalties too negative).
struct ExistenceError : Error {
  using Error::Error;
};

/// A numerical optimizer failed to produce a usable minimum.
struct OptimizerError : Error {
  using Error::Error;
};

}  // namespace pcs
