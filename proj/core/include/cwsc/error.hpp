#pragma once

#include <stdexcept>
#include <string>

namespace cwsc {

enum class ErrorKind {
  SupercriticalRequired,
  DomainError,
  DiracMeasure,
  OracleScaleExceeded,
  NumericalFailure,
  ScaleExceeded,
  ConfigError,
  IoError,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so the
/// CLI can map it onto an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::SupercriticalRequired: return "SupercriticalRequired";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::DiracMeasure: return "DiracMeasure";
    case ErrorKind::OracleScaleExceeded: return "OracleScaleExceeded";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::ScaleExceeded: return "ScaleExceeded";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace cwsc
