#pragma once

#include <stdexcept>
#include <string>

namespace qpa {

enum class ErrorKind {
  NotHermitian,
  NoConvergence,
  DimensionOverflow,
  DimensionMismatch,
  NotDensityOperator,
  InvalidDistribution,
  ZeroProbabilityEvent,
  RangeMismatch,
  InvalidAlpha,
  InvalidEpsilon,
  TooLarge,
  LengthMismatch,
  SeedSpaceTooLarge,
  InvalidFamily,
  ParseError,
  ValidationError,
  CapExceeded,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DimensionOverflow: return "DimensionOverflow";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotDensityOperator: return "NotDensityOperator";
    case ErrorKind::InvalidDistribution: return "InvalidDistribution";
    case ErrorKind::ZeroProbabilityEvent: return "ZeroProbabilityEvent";
    case ErrorKind::RangeMismatch: return "RangeMismatch";
    case ErrorKind::InvalidAlpha: return "InvalidAlpha";
    case ErrorKind::InvalidEpsilon: return "InvalidEpsilon";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::SeedSpaceTooLarge: return "SeedSpaceTooLarge";
    case ErrorKind::InvalidFamily: return "InvalidFamily";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::CapExceeded: return "CapExceeded";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above so
/// callers (and the CLI exit-code mapping) can dispatch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// The text without the leading kind name.
  std::string message() const { return std::string(what()).substr(std::string(to_string(kind_)).size() + 2); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace qpa
