#pragma once

#include <stdexcept>
#include <string>

namespace popstat {

/// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A coordinate fell outside the supported extent (projection or grid).
struct ExtentError : Error {
    using Error::Error;
};

/// Malformed input file (CSV/JSON); message carries file and line/field.
struct ParseError : Error {
    using Error::Error;
};

/// Structurally valid input that violates a semantic requirement.
struct DataError : Error {
    using Error::Error;
};

/// Bad configuration value (CLI flag, config file field).
struct ConfigError : Error {
    using Error::Error;
};

/// Sampling profile missing or inconsistent with the dataset.
struct ProfileError : Error {
    using Error::Error;
};

/// A user sequence has no stay-point usable as a home anchor.
struct NoHomeError : DataError {
    using DataError::DataError;
};

/// Training could not proceed (empty set, non-finite loss, ...).
struct TrainingError : Error {
    using Error::Error;
};

} // namespace popstat
