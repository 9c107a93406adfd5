#pragma once

#include <stdexcept>
#include <string>

namespace hsvi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The caller asked for a belief update along an observation that cannot occur.
class ZeroProbabilityObservation : public Error {
public:
    using Error::Error;
};

/// A model violates a stochasticity or range invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& message, int line)
        : Error("line " + std::to_string(line) + ": " + message), line_(line) {}

    int line() const { return line_; }

private:
    int line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class InvalidParams : public Error {
public:
    using Error::Error;
};

/// MDP value iteration hit its sweep cap.
class NoConvergence : public Error {
public:
    using Error::Error;
};

/// Exploration went deeper than the theoretical depth bound allows.
class DepthCapExceeded : public Error {
public:
    using Error::Error;
};

} // namespace hsvi
