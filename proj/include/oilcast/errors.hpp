#pragma once

#include <stdexcept>
#include <string>

namespace oilcast {

// Base for every toolkit error. Subclasses map onto CLI exit codes:
// UsageError -> 1, DataError -> 2, DivergenceError -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller misuse: bad arguments, violated preconditions, wrong call order.
class UsageError : public Error {
public:
    using Error::Error;
};

// Dimension or length mismatch between tensors/vectors.
class ShapeError : public UsageError {
public:
    using UsageError::UsageError;
};

// Problems with the input data itself.
class DataError : public Error {
public:
    using Error::Error;
};

// Malformed text input; message names the offending row.
class ParseError : public DataError {
public:
    using DataError::DataError;
};

// Two observations share one calendar date.
class DuplicateDateError : public DataError {
public:
    using DataError::DataError;
};

// Values outside the operation's domain (non-positive price,
// scale-kind mismatch, degenerate min==max, ...).
class DomainError : public DataError {
public:
    using DataError::DataError;
};

// Unreadable, truncated, or wrong-version checkpoint stream.
class CheckpointError : public DataError {
public:
    using DataError::DataError;
};

// Training produced a non-finite loss; message names the epoch.
class DivergenceError : public Error {
public:
    using Error::Error;
};

} // namespace oilcast
