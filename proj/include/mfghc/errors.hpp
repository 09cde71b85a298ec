#pragma once

#include <stdexcept>
#include <string>

namespace mfghc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation
/// (r <= 1, nonpositive viscosity, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Two grid functions that must share a grid do not.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A density or transformed unknown is not strictly positive.
class PositivityError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace mfghc
