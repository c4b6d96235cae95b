#pragma once

#include <stdexcept>
#include <string>

namespace vidtext {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem or codec failure.
class IoError : public Error {
public:
    using Error::Error;
};

/// A caller broke an operation precondition.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Input that parses but violates a domain rule (grammar, ground truth, generator spec).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Frame size disagrees with the size a descriptor was authored for.
class SizeMismatchError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Input with no usable signal, e.g. an all-zero histogram.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/// Bad pipeline configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace vidtext
