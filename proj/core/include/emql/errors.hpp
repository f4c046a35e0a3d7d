#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace emql {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Element id outside the universe a set or sketch was declared over.
class UniverseError : public Error {
 public:
  using Error::Error;
};

/// Sketches built from different hash families cannot be combined.
class IncompatibleSketchError : public Error {
 public:
  using Error::Error;
};

/// Vector/matrix dimension mismatch.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Operands from different universes, or a malformed query tree.
class TypeError : public Error {
 public:
  using Error::Error;
};

/// Bad argument value: non-finite or negative weight, k == 0, etc.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

class EmptySetError : public Error {
 public:
  using Error::Error;
};

class EmptyKbError : public Error {
 public:
  using Error::Error;
};

class UnknownNameError : public Error {
 public:
  using Error::Error;
};

class UninitializedEmbeddingError : public Error {
 public:
  using Error::Error;
};

/// The triple matrix was not rebuilt after an embedding update.
class StaleTripleMatrixError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

/// Syntax error in a KB file or query string. `line` is 1-based (0 when not
/// line oriented); `offset` is a 0-based byte offset into the line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t offset)
      : Error(what), line_(line), offset_(offset) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t line_;
  std::size_t offset_;
};

}  // namespace emql
