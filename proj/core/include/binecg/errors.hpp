#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace binecg {

/// A tensor shape that cannot be processed (e.g. a pooling window longer
/// than its input, or a convolution producing fewer than one output).
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation called in the wrong lifecycle state, such as backward
/// without a cached forward pass.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Non-finite values reached the optimizer.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input; `line()` is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Malformed binary input; `offset()` is the byte offset where decoding failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::size_t offset, const std::string& what)
      : std::runtime_error("offset " + std::to_string(offset) + ": " + what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace binecg
