#pragma once

#include <stdexcept>
#include <string>

namespace hscan {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or unacceptable user input (bad CSV, unknown column, bad flag value).
class InputError : public Error {
public:
    using Error::Error;
};

/// A referenced entity (record, project, scan) does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

/// The operation is not allowed in the current state (e.g. too few includes to rerank).
class ConflictError : public Error {
public:
    using Error::Error;
};

/// Network or remote service failure. `retryable` distinguishes transient faults.
class TransportError : public Error {
public:
    TransportError(const std::string& what, bool retryable = true)
        : Error(what), retryable_(retryable) {}
    bool retryable() const noexcept { return retryable_; }

private:
    bool retryable_;
};

/// A backend or provider is missing required configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace hscan
