#pragma once

#include <stdexcept>
#include <string>

namespace finsler {

// Base of every error raised by the library. Callers that only care about
// "the computation could not be carried out" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Phase point outside the metric's domain (guard violated, y = 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Division by a jet (or scalar) whose value part is zero.
class PoleError : public Error {
 public:
  using Error::Error;
};

// sqrt / ln / fractional power of a non-positive value.
class BranchError : public Error {
 public:
  using Error::Error;
};

// A derivative was requested beyond the retained jet order.
class OrderError : public Error {
 public:
  using Error::Error;
};

// Jets with different (dim, order) signatures were combined.
class SignatureError : public Error {
 public:
  using Error::Error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& what, int line, int column)
      : Error(what + " (line " + std::to_string(line) + ", column " +
              std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class HomogeneityError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Operation not defined for the metric family at hand.
class FamilyError : public Error {
 public:
  using Error::Error;
};

class SingularMetricError : public Error {
 public:
  using Error::Error;
};

class UnknownFieldError : public Error {
 public:
  using Error::Error;
};

// Structurally invalid metric configuration (missing keys, bad values).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace finsler
