#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace idt {

/// Base class for every error raised by the monitor.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class CalibrationError : public Error {
public:
  using Error::Error;
};

class EstimationError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class ReportError : public Error {
public:
  using Error::Error;
};

class DistributionError : public Error {
public:
  using Error::Error;
};

class OracleError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// Malformed input. Carries the 1-based line number when the error came from
/// a line-oriented source (0 otherwise).
class FormatError : public Error {
public:
  explicit FormatError(const std::string& what, std::size_t line = 0);

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

}  // namespace idt
