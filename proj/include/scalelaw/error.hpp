#pragma once

#include <stdexcept>
#include <string>

namespace scalelaw {

// Validation failures map to CLI exit code 1, numerical failures to 2.
enum class ErrorKind { validation, numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::validation, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::numerical, what) {}
};

// Malformed input record.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& field, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": field '" + field +
                        "': " + what),
        line_(line),
        field_(field) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

class ConflictError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InsufficientDataError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A requested loss level or target lies outside what the data or law supports.
class RangeError : public ValidationError {
 public:
  RangeError(const std::string& what, double limit)
      : ValidationError(what), limit_(limit) {}

  double limit() const noexcept { return limit_; }

 private:
  double limit_;
};

}  // namespace scalelaw
