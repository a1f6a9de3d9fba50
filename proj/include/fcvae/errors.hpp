#pragma once

#include <stdexcept>
#include <string>

namespace fcvae {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration value; `key()` names the offending setting.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& message)
        : Error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Input data that cannot be used (duplicate timestamps, no normal points, ...).
class DataError : public Error {
public:
    using Error::Error;
};

/// Malformed CSV row.
class ParseError : public DataError {
public:
    ParseError(std::size_t line, std::string detail, const std::string& source = {})
        : DataError((source.empty() ? "" : source + ": ") + "line " + std::to_string(line) + ": " + detail),
          line_(line),
          detail_(std::move(detail)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::size_t line_;
    std::string detail_;
};

/// Non-finite values during optimisation or scoring.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Tensor shapes that do not conform for an operation.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// API misuse (backward on a non-scalar, missing gradient, length mismatch).
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace fcvae
