#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pcv {

enum class ErrorCode {
  InvalidArgument = 1,
  ParseError,
  EmptyDataset,
  NonSpdFactor,
  Breakdown,
  ConfigError,
  IoError,
};

// Base exception for everything the library throws on purpose. The C API maps
// `code()` one-to-one onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::size_t column, const std::string& what)
      : Error(ErrorCode::ParseError,
              "row " + std::to_string(row) + ", column " +
                  std::to_string(column) + ": " + what),
        row_(row),
        column_(column) {}

  // 1-based line number in the source file and 1-based column.
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorCode::InvalidArgument, what);
}

}  // namespace pcv
