#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tcmkg {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A record in an input file (corpus, annotations, ratings, fixtures) is malformed.
/// `line` is 1-based; 0 when the problem is not tied to a line.
class InputError : public Error {
public:
    InputError(std::string source, std::size_t line, std::string field, const std::string& what);

    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::string source_;
    std::size_t line_;
    std::string field_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

/// Raised by LLM clients. Never converted into a fabricated response.
class TransportError : public Error {
public:
    TransportError(const std::string& what, int status = 0, bool retryable = false)
        : Error(what), status_(status), retryable_(retryable) {}

    /// HTTP status, or 0 for connection-level failures.
    int status() const noexcept { return status_; }
    bool retryable() const noexcept { return retryable_; }

private:
    int status_;
    bool retryable_;
};

/// Response text exceeded the configured parser limit.
class ResourceError : public Error {
public:
    using Error::Error;
};

class SnapshotError : public Error {
public:
    SnapshotError(std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace tcmkg
