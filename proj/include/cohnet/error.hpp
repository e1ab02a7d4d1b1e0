#pragma once

#include <stdexcept>
#include <string>

namespace cohnet {

// Every failure raised by the library derives from Error, so callers that
// only care about "did this stage work" can catch one type. The subclasses
// map onto the CLI exit codes (config vs data problems).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad parameters, malformed config, violated preconditions on arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Anything wrong with input data: shapes, labels, truncated files.
class DataError : public Error {
 public:
  using Error::Error;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

class MissingFieldError : public DataError {
 public:
  explicit MissingFieldError(const std::string& field)
      : DataError("missing field: " + field), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class StructuralError : public DataError {
 public:
  using DataError::DataError;
};

class SegmentTooShortError : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateChannelError : public DataError {
 public:
  DegenerateChannelError(std::size_t channel, const std::string& what)
      : DataError(what), channel_(channel) {}
  std::size_t channel() const noexcept { return channel_; }

 private:
  std::size_t channel_;
};

class FilterDesignError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class LengthError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace cohnet
