#ifndef GLFIELD_ERRORS_HPP
#define GLFIELD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace glfield {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad numeric input to an otherwise valid call (negative duration, E < 0, ...).
struct DomainError : Error {
    using Error::Error;
};

// Quadratic flow queried at or beyond its finite-time divergence.
struct BlowUpExceeded : Error {
    using Error::Error;
};

// Operation only defined for the other dynamics kind.
struct KindError : Error {
    using Error::Error;
};

struct PreconditionError : Error {
    using Error::Error;
};

// Config file errors, in increasing order of how far parsing got.
struct ParseError : Error {
    using Error::Error;
};
struct SchemaError : Error {
    using Error::Error;
};
struct ValidationError : Error {
    using Error::Error;
};

// An engine detected a state that the construction makes impossible.
struct EngineInvariantViolation : Error {
    using Error::Error;
};

// Explicit-scheme step size violates the stability bound.
struct StabilityError : Error {
    using Error::Error;
};

} // namespace glfield

#endif
