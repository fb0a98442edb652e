#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pswarm {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Degenerate integration span (t_start == t_end).
class InvalidSpanError : public Error {
public:
    using Error::Error;
};

/// Node count below the minimum (or otherwise unusable sizes).
class InvalidSizeError : public Error {
public:
    using Error::Error;
};

/// Matrix/block dimension mismatch.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Guess, grid, and block node times do not line up.
class AlignmentError : public Error {
public:
    using Error::Error;
};

/// Non-finite value produced during iteration; identifies the first bad sample.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::int64_t node, std::int64_t column)
        : Error(what), node_(node), column_(column) {}
    std::int64_t node() const noexcept { return node_; }
    std::int64_t column() const noexcept { return column_; }

private:
    std::int64_t node_;
    std::int64_t column_;
};

/// Force evaluation at (or too close to) a gravitating body.
class SingularityError : public Error {
public:
    explicit SingularityError(const std::string& what, std::string body = {})
        : Error(what), body_(std::move(body)) {}
    const std::string& body() const noexcept { return body_; }

private:
    std::string body_;
};

/// Requested epoch outside a tabulated ephemeris span.
class CoverageError : public Error {
public:
    CoverageError(const std::string& what, double epoch) : Error(what), epoch_(epoch) {}
    double epoch() const noexcept { return epoch_; }

private:
    double epoch_;
};

/// State is not on a bound conic (used by conic propagation and warm starts).
class NonEllipticError : public Error {
public:
    using Error::Error;
};

/// An internal root-finding loop failed to converge.
class SolverError : public Error {
public:
    using Error::Error;
};

/// Invalid group partition request.
class InvalidPlanError : public Error {
public:
    using Error::Error;
};

/// Reduction over an empty array.
class EmptyReductionError : public Error {
public:
    using Error::Error;
};

/// Reference integrator ran out of steps or broke down.
class OracleError : public Error {
public:
    using Error::Error;
};

/// Malformed input file or configuration.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Solve phase exceeded the configured wall-clock budget.
class TimeoutError : public Error {
public:
    using Error::Error;
};

} // namespace pswarm
