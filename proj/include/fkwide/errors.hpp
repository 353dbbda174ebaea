#pragma once

#include <stdexcept>
#include <string>

namespace fkwide {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A query point or time outside the closure of the space-time domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A coefficient sample violating its invariants. `field()` names the offender.
class CoefficientError : public Error {
public:
    CoefficientError(std::string field, const std::string& what)
        : Error(what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Precondition violated by a caller-supplied argument.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Inconsistent configuration (scheme/boundary mismatch, missing exact solution, CFL).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Unknown name in a registry lookup.
class LookupError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Iterative solver failure or broken matrix structure.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace fkwide
