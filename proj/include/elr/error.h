#ifndef ELR_ERROR_H_
#define ELR_ERROR_H_

#include <stdexcept>
#include <string>

namespace elr {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed files, violated preconditions, unknown names.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Syntax error in a rule program, with 1-based source position.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string &message, int line, int column)
      : ValidationError(message), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Numerical failure during training or scoring (NaN, divergence).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Lookup endpoint failure. retriable() is true for transport errors.
class NetworkError : public Error {
 public:
  NetworkError(const std::string &message, bool retriable)
      : Error(message), retriable_(retriable) {}
  bool retriable() const { return retriable_; }

 private:
  bool retriable_;
};

}  // namespace elr

#endif  // ELR_ERROR_H_
