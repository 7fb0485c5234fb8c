#include "vseg/error.hpp"

namespace vseg {

const char* error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::UnsupportedMaxval: return "UnsupportedMaxval";
    case ErrorCode::TruncatedData: return "TruncatedData";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::NotAMask: return "NotAMask";
    case ErrorCode::DegenerateDataset: return "DegenerateDataset";
    case ErrorCode::DegenerateRange: return "DegenerateRange";
    case ErrorCode::InvalidGamma: return "InvalidGamma";
    case ErrorCode::PatchLargerThanImage: return "PatchLargerThanImage";
    case ErrorCode::StrideExceedsPatch: return "StrideExceedsPatch";
    case ErrorCode::MissingPrediction: return "MissingPrediction";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::OddSpatialDims: return "OddSpatialDims";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::IndivisibleInput: return "IndivisibleInput";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::NumericAbort: return "NumericAbort";
    case ErrorCode::TooFewPatches: return "TooFewPatches";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::EmptyFov: return "EmptyFov";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::BadK: return "BadK";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::LayoutError: return "LayoutError";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

int error_exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NumericAbort:
      return 3;
    case ErrorCode::UnknownKey:
    case ErrorCode::InvalidValue:
    case ErrorCode::InvalidArgument:
      return 1;
    default:
      return 2;
  }
}

}  // namespace vseg
