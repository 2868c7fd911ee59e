#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ptqm {

enum class ErrorKind {
  DimensionMismatch,
  NonFinite,
  EigFailure,
  AmbiguousPairing,
  DefectiveSpectrum,
  BadGrid,
  BadModel,
  BranchDomain,
  SyntaxError,
  NonPolynomial,
  BrokenPhase,
  PhaseFixFailure,
  MetricNotPositive,
  FrameInconsistent,
  InvalidArgument,
  IoError,
  ConfigError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::EigFailure: return "EigFailure";
    case ErrorKind::AmbiguousPairing: return "AmbiguousPairing";
    case ErrorKind::DefectiveSpectrum: return "DefectiveSpectrum";
    case ErrorKind::BadGrid: return "BadGrid";
    case ErrorKind::BadModel: return "BadModel";
    case ErrorKind::BranchDomain: return "BranchDomain";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::NonPolynomial: return "NonPolynomial";
    case ErrorKind::BrokenPhase: return "BrokenPhase";
    case ErrorKind::PhaseFixFailure: return "PhaseFixFailure";
    case ErrorKind::MetricNotPositive: return "MetricNotPositive";
    case ErrorKind::FrameInconsistent: return "FrameInconsistent";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a kind so callers (and the
/// CLI exit-code mapping) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failure with the byte offset into the source text.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, std::string expected)
      : Error(ErrorKind::SyntaxError,
              "at offset " + std::to_string(position) + ": expected " + expected),
        position_(position),
        expected_(std::move(expected)) {}

  std::size_t position() const noexcept { return position_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::size_t position_;
  std::string expected_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace ptqm
