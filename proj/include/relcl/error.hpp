#pragma once

#include <stdexcept>
#include <string>

namespace relcl {

// Input that violates a data invariant (corpus schema, spans, label sets).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the 1-based line number when known.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a loss has no defined value for the given batch (e.g. no positives).
class UndefinedLossError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LengthError : public std::length_error {
 public:
  using std::length_error::length_error;
};

class EncodingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PredictionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace relcl
