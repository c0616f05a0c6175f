#pragma once

#include <stdexcept>
#include <string>

namespace csched {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad model data: dimension mismatch, asymmetric/indefinite covariance, bad probability.
struct ModelError : Error {
    using Error::Error;
};

// An iterative solver failed to converge within its iteration budget.
struct DivergenceError : Error {
    using Error::Error;
};

// A ladder or table was asked for an index beyond its depth.
struct TruncationError : Error {
    using Error::Error;
};

// Requested problem size exceeds a configured cap.
struct ResourceError : Error {
    using Error::Error;
};

// Numeric failure (e.g. log-determinant of a non-PD matrix).
struct NumericError : Error {
    using Error::Error;
};

}  // namespace csched
