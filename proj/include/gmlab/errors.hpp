#pragma once

#include <stdexcept>
#include <string>

namespace gmlab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RankDeficientError : Error {
    using Error::Error;
};

struct NotPositiveDefiniteError : Error {
    using Error::Error;
};

struct DimensionMismatchError : Error {
    using Error::Error;
};

struct NotSymmetricError : Error {
    using Error::Error;
};

/// A candidate H matrix violates a quadratic-unbiasedness constraint.
/// Message carries the offending constraint and its residual magnitude.
struct ConstraintViolatedError : Error {
    using Error::Error;
};

struct SupportTooLargeError : Error {
    using Error::Error;
};

struct FourthMomentsUnavailableError : Error {
    using Error::Error;
};

struct ThirdMomentsUnavailableError : Error {
    using Error::Error;
};

struct NotCenteredError : Error {
    using Error::Error;
};

struct LeaveOneOutRankDeficientError : Error {
    using Error::Error;
};

struct IoError : Error {
    explicit IoError(const std::string& msg, long line = -1)
        : Error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_number(line) {}
    long line_number;
};

}  // namespace gmlab
