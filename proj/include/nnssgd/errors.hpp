#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nnssgd {

/// Caller supplied an argument outside an operation's domain.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative kernel failed to converge or produced non-finite values.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data is semantically unusable (duplicates, NaN, empty sets).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A text record could not be parsed. Carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A binary model file is malformed (bad magic, truncation, checksum).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nnssgd
