#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wattcast {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (CSV rows, timestamps, config values).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  /// 1-based line number of the offending row, 0 when not line-oriented.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Invalid configuration or violated precondition on user-supplied values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensor shape incompatibility inside the numeric engine.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A training run produced a non-finite loss.
class DivergedError : public Error {
 public:
  using Error::Error;
};

}  // namespace wattcast
