#pragma once

#include <stdexcept>
#include <string>

namespace seatrade {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input data violates an operation's precondition (bad raster, empty join, ...).
class DataError : public Error {
public:
  using Error::Error;
};

/// Invalid configuration or parameter value.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Attribute name or column layout does not match the expected schema.
class SchemaError : public DataError {
public:
  using DataError::DataError;
};

}  // namespace seatrade
