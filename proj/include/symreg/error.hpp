#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace symreg {

// Base for every error raised by the library. Numeric domain violations during
// model evaluation are not errors; they surface as nonfinite values instead.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A data cell that is neither a real number nor a declared missing token.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line, std::size_t column)
        : Error(message + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")")
        , line_(line)
        , column_(column)
    {
    }

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

// Ragged rows and other shape violations.
class StructuralError : public Error {
public:
    using Error::Error;
};

// Duplicate or unknown names, unresolvable variable references.
class SchemaError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class SizeError : public Error {
public:
    using Error::Error;
};

// Caller violated an operation's precondition.
class UsageError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace symreg
