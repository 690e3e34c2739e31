#pragma once

#include <stdexcept>
#include <string>

namespace mvmdlstm {

// Error categories double as CLI exit codes.
enum class ErrorKind : int {
  config = 2,
  data = 3,
  numeric = 4,
  fixture = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

struct FixtureMismatch : Error {
  explicit FixtureMismatch(const std::string& what) : Error(ErrorKind::fixture, what) {}
};

/// CSV cell that is not a number. `row` is the 1-based data row (header excluded).
struct ParseError : DataError {
  ParseError(std::size_t row, const std::string& what)
      : DataError("row " + std::to_string(row) + ": " + what), row(row) {}
  std::size_t row;
};

struct GapError : DataError {
  GapError(std::size_t row, const std::string& what)
      : DataError("row " + std::to_string(row) + ": missing value (" + what + ")"), row(row) {}
  std::size_t row;
};

struct CadenceError : DataError {
  CadenceError(std::size_t row, const std::string& what)
      : DataError("row " + std::to_string(row) + ": " + what), row(row) {}
  std::size_t row;
};

struct AliasingError : ConfigError {
  using ConfigError::ConfigError;
};

struct DegenerateScaleError : DataError {
  using DataError::DataError;
};

struct MetricError : DataError {
  using DataError::DataError;
};

/// A partition or window set too small for the requested lags.
struct SplitError : DataError {
  using DataError::DataError;
};

struct GpFitError : NumericError {
  using NumericError::NumericError;
};

/// Prefixes an error message with the pipeline phase that raised it, keeping the kind.
class PhaseError : public Error {
 public:
  PhaseError(std::string phase, const Error& inner)
      : Error(inner.kind(), "[" + phase + "] " + inner.what()), phase_(std::move(phase)) {}
  const std::string& phase() const noexcept { return phase_; }

 private:
  std::string phase_;
};

}  // namespace mvmdlstm
