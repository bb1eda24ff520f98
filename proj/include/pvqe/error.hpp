#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pvqe {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Sizes that do not match, or that exceed the dense simulation limit.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// An argument violates a documented precondition.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// A numerical procedure could not produce a meaningful result
/// (singular matrix, annihilated post-selection, ...).
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Malformed text input. `line()` is 1-based; 0 when not tied to a line.
class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string &what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Invalid experiment or CLI configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace pvqe
