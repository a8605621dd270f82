#pragma once

#include <stdexcept>
#include <string>

namespace splatfeat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (bad header, bad magic, truncated payload).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Input parsed but violates a domain invariant (non-finite values,
/// non-orthonormal rotation, out-of-range ids).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Operation called with arguments it does not accept (missing features,
/// mismatched shapes, degenerate configuration).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace splatfeat
