#pragma once

#include <stdexcept>
#include <string>

namespace btcdir {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file: bad date, bad number, missing column.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Structural violation: duplicate dates, colliding column names.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or hyperparameter.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// No fully observed date window exists.
class EmptyRangeError : public Error {
 public:
  using Error::Error;
};

/// Training labels contain a single class.
class DegenerateLabelError : public Error {
 public:
  using Error::Error;
};

/// Matrix/vector dimensions disagree with a fitted model.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Operation not supported for this model kind.
class UnsupportedOpError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage is missing an upstream artifact.
class DependencyError : public Error {
 public:
  using Error::Error;
};

/// A fitted artifact saw rows outside its allowed scope.
class AuditViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace btcdir

namespace btcdir {

/// Series too short to produce a single indicator value.
class WarmupExhaustedError : public Error {
 public:
  using Error::Error;
};

}  // namespace btcdir
