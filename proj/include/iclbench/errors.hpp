#pragma once

#include <stdexcept>
#include <string>

namespace iclbench {

/// Root of every error thrown by the harness.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Missing columns, empty files, malformed manifests.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A cell that could not be read as a number.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Too few records for the requested operation.
class SizeError : public Error {
public:
    using Error::Error;
};

/// Input violates a documented precondition (zero variance, bad k, bad cell).
class ValidationError : public Error {
public:
    using Error::Error;
};

class SingularSystemError : public Error {
public:
    using Error::Error;
};

/// Endpoint could not be reached or returned a server-side failure. Retryable.
class TransportError : public Error {
public:
    using Error::Error;
};

/// HTTP 429. Retryable after backoff.
class RateLimitError : public TransportError {
public:
    using TransportError::TransportError;
};

/// HTTP 4xx other than 429, missing API key, and similar. Never retried.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// An offline responder could not make sense of the prompt it was handed.
class MockError : public ConfigurationError {
public:
    using ConfigurationError::ConfigurationError;
};

} // namespace iclbench
