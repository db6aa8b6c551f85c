#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aidetect {

// Base of every library error. The CLI maps these to exit status 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or hyperparameters (vocab too small, empty corpus...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Required CSV column missing.
class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& column)
      : Error("missing column '" + column + "'"), column_(column) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

// A data row violates the record contract; row is the 0-based data-row index.
class RowError : public Error {
 public:
  RowError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

// Malformed CSV; offset is the byte offset into the file.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : Error("parse error at byte " + std::to_string(offset) + ": " + what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

// Scoring a text that has no words.
class UndefinedInputError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf in loss or gradients.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace aidetect
