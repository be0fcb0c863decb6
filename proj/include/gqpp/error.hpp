#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gqpp {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or missing input data (files, records, identifiers).
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class InputError : public DataError {
 public:
  using DataError::DataError;
};

/// Violated precondition of an operation (shapes, ranges, call order).
class ContractError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// Numerical failure: zero variance, division by zero, non-finite loss.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace gqpp
