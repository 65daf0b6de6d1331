#pragma once

#include <stdexcept>
#include <string>

namespace ucoreps {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inputs whose shapes or layer structure do not match.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// A value outside the domain of the operation (non-positive KL argument, NaN, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A state or state-action pair with zero mass where a ratio is required.
class DegenerateMarginalError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Invalid experiment configuration. `field()` holds the JSON path of the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Malformed MDP description file.
class ParseError : public Error {
public:
    ParseError(int line, const std::string& message)
        : Error("line " + std::to_string(line) + ": " + message), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

} // namespace ucoreps
