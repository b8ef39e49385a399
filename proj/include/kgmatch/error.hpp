#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgmatch {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error {
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line(line),
        column(column) {}
  std::size_t line;
  std::size_t column;
};

struct LookupError : Error {
  using Error::Error;
};

struct ShapeError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// Violated operation precondition that would otherwise produce a silent NaN/inf.
struct ContractError : Error {
  using Error::Error;
};

struct ConflictError : Error {
  using Error::Error;
};

}  // namespace kgmatch
