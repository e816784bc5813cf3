#ifndef SSLDR_ERRORS_HPP
#define SSLDR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ssldr {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape mismatch in a linear-algebra operation.
struct DimensionError : Error {
  using Error::Error;
};

// Malformed or inconsistent dataset files / values.
struct DataError : Error {
  using Error::Error;
};

// Invalid configuration (infeasible density, too few folds, ...).
struct ConfigError : Error {
  using Error::Error;
};

// Out-of-range fold or element index.
struct IndexError : Error {
  using Error::Error;
};

// Invalid function input (empty string, empty batch, ...).
struct InputError : Error {
  using Error::Error;
};

// Unknown identifier or token id.
struct LookupError : Error {
  using Error::Error;
};

// Optimization failure (divergence, impossible negative sampling).
struct TrainingError : Error {
  using Error::Error;
};

struct SamplingError : Error {
  using Error::Error;
};

// Degenerate metric input (single-class labels, no positives).
struct MetricError : Error {
  using Error::Error;
};

// Non-finite value where a finite one is required.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace ssldr

#endif  // SSLDR_ERRORS_HPP
