#pragma once

#include <stdexcept>
#include <string>

namespace hrm {

/// Base for every error raised by the toolkit. `code()` is a stable
/// snake_case identifier surfaced verbatim in CLI/HTTP error payloads.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Input data could not be read or failed validation.
class DataError : public Error {
public:
    using Error::Error;
};

/// A value lies outside the mathematical domain of an operation
/// (zero denominators, degenerate ranges, too few points, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

}  // namespace hrm
