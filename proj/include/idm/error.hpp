#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace idm {

enum class ErrorKind {
  InvalidFlagCombination,
  NegativeTime,
  DimensionMismatch,
  MissingValue,
  ParseError,
  ConfigError,
  DomainError,
  NonConvergence,
  NonFiniteObjective,
  EmptyRiskSet,
  ZeroEvents,
  DegenerateBandwidth,
  NegativeIncrement,
  RootNotBracketed,
  TooManyFailures,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Input and configuration problems (CLI exit code 2) versus numeric or
/// runtime failures (exit code 1).
bool is_input_error(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Validation failure pinned to a data row (0-based, excluding the header).
class RowError : public Error {
 public:
  RowError(ErrorKind kind, std::size_t row, const std::string& message)
      : Error(kind, "row " + std::to_string(row) + ": " + message), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace idm
