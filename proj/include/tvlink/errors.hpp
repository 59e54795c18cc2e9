#pragma once

#include <stdexcept>
#include <string>

namespace tvlink {

// Error categories map 1:1 onto CLI exit codes:
//   IoError -> 1, ParamError -> 2, NumericalError -> 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Missing, unreadable, or malformed input files (positioned messages where possible).
struct IoError : Error {
    using Error::Error;
};

// Invalid parameter values: bad flags, out-of-range configuration, violated preconditions.
struct ParamError : Error {
    using Error::Error;
};

// Numerical failures: divergent solves, invalid curve construction.
struct NumericalError : Error {
    using Error::Error;
};

} // namespace tvlink
