#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace toxlex {

// Base of every error raised by the library. Callers that only need a
// diagnostic catch this; the subclasses exist so the CLI and service can map
// failures onto exit codes and HTTP statuses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input at a known location. Line and column are 1-based; zero
// means "not applicable".
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : Error(format(what, line, column)), line_(line), column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    if (line == 0) return what;
    std::string out = "line " + std::to_string(line);
    if (column != 0) out += ", column " + std::to_string(column);
    return out + ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

class SyntaxError : public ParseError {
 public:
  using ParseError::ParseError;
};

class RangeError : public ParseError {
 public:
  using ParseError::ParseError;
};

class SchemaError : public ParseError {
 public:
  using ParseError::ParseError;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class CompileError : public Error {
 public:
  using Error::Error;
};

// A score does not belong to the text it is being rendered against.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Input parsed, but most of it does not fit the chosen adapter.
class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionConflict : public Error {
 public:
  using Error::Error;
};

}  // namespace toxlex
