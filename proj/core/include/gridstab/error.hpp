#pragma once

#include <stdexcept>
#include <string>

namespace gridstab {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters or inconsistent configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input documents (grid JSON, manifests, checkpoints, CSV).
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Graph is not connected where connectivity is required.
class ConnectivityError : public Error {
public:
    using Error::Error;
};

/// Injections do not sum to zero, or cannot be balanced (odd n).
class BalanceError : public Error {
public:
    using Error::Error;
};

/// Vector or matrix dimensions do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// The power-flow problem has no stable synchronous operating point
/// reachable by the relaxation solver.
class NoSyncStateError : public Error {
public:
    using Error::Error;
};

/// Training produced a nonfinite loss.
class TrainingError : public Error {
public:
    using Error::Error;
};

/// Filesystem failures.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace gridstab
