#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace litr {

// Malformed input or configuration (CLI exit code 2).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A data-file problem tied to one cell. `row` is the 1-based data row
// (header excluded); 0 means the header itself.
class DataError : public ValidationError {
 public:
  DataError(std::size_t row, std::string column, const std::string& message)
      : ValidationError("row " + std::to_string(row) + ", column '" + column +
                        "': " + message),
        row_(row),
        column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

}  // namespace litr
