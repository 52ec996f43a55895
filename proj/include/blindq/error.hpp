#pragma once

#include <stdexcept>
#include <string>

namespace blindq {

// Base for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Distribution, policy or analysis parameters outside their valid range.
class ParameterError : public Error {
public:
    using Error::Error;
};

// E[B] >= E[A]: the queue has no stationary regime.
class UnstableSystemError : public Error {
public:
    using Error::Error;
};

class EmptyInstanceError : public Error {
public:
    using Error::Error;
};

// Malformed instance or config text. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

// Raised when the simulator or a policy reaches a state that cannot occur
// under correct event sequencing.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

class SizeError : public Error {
public:
    using Error::Error;
};

}  // namespace blindq
