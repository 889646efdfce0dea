#pragma once

#include <stdexcept>
#include <string>

namespace ecol2 {

/// Base class for all errors raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An input lies outside the mathematical domain of an operation (e.g. R >= 1).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A hyperparameter or configuration value is invalid (e.g. alpha == 1).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Filesystem, parse or persistence failure.
class IoError : public Error {
public:
    using Error::Error;
};

/// A numerical solver failed (blow-up, stability bound violated).
class SolverError : public Error {
public:
    using Error::Error;
};

}  // namespace ecol2
