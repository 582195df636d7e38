#pragma once

#include <stdexcept>
#include <string>

namespace lwinnn {

/// Base class for every error the library reports.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad magic bytes, unknown version, or a truncated header.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Declared dims disagree with the payload that follows them.
class CorruptionError : public Error {
public:
    using Error::Error;
};

/// Structurally sound data that violates a value invariant (NaN/Inf, bad label, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration, or a configuration that does not fit the data.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Operand shapes that cannot be combined.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Caller violated a documented precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A metric is undefined on the given data (single class, no regions, ...).
class MetricError : public Error {
public:
    using Error::Error;
};

} // namespace lwinnn
