#pragma once

#include <stdexcept>
#include <string>

namespace hetclutter {

enum class ErrorCode {
  NotPositiveDefinite,
  DimensionMismatch,
  DowndateSingular,
  ZeroVector,
  InvalidRho,
  InvalidArgument,
  DegenerateSteering,
  InsufficientTrials,
  MalformedHeader,
  TruncatedPayload,
  NonFiniteSample,
  InvalidWindow,
  InsufficientBins,
  Io,
};

const char* to_string(ErrorCode code);

/// Library-wide exception. Everything thrown by hetclutter carries a code so
/// the CLI can map numerical failures and validation failures to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for failures that come from the data or arithmetic rather than
  /// from malformed input.
  bool numerical() const noexcept {
    return code_ == ErrorCode::NotPositiveDefinite || code_ == ErrorCode::DowndateSingular ||
           code_ == ErrorCode::DegenerateSteering;
  }

 private:
  ErrorCode code_;
};

}  // namespace hetclutter
