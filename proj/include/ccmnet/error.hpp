#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ccmnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument or a data invariant was violated.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed input text. `line()` is 1-based, 0 when not applicable.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Invalid run configuration (maps to exit code 2 in the CLI).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace ccmnet
