#include "hetclutter/error.hpp"

namespace hetclutter {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DowndateSingular: return "DowndateSingular";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::InvalidRho: return "InvalidRho";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateSteering: return "DegenerateSteering";
    case ErrorCode::InsufficientTrials: return "InsufficientTrials";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::NonFiniteSample: return "NonFiniteSample";
    case ErrorCode::InvalidWindow: return "InvalidWindow";
    case ErrorCode::InsufficientBins: return "InsufficientBins";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace hetclutter
