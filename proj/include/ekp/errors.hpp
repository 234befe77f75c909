#pragma once

#include <stdexcept>
#include <string>

namespace ekp {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Mismatched matrix/vector dimensions.
struct ShapeError : Error {
    using Error::Error;
};

/// Invalid argument values (negative weights, bad labels, empty grids, ...).
struct DomainError : Error {
    using Error::Error;
};

/// Numerical failure: factorization breakdown, solver non-convergence.
/// `detail` carries the final residual or KKT violation when available.
struct NumericError : Error {
    explicit NumericError(const std::string& msg, double detail_value = 0.0)
        : Error(msg), detail(detail_value) {}
    double detail;
};

/// Malformed input file; message includes the offending line number.
struct ParseError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace ekp
