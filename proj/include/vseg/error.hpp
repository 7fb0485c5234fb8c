#pragma once

#include <stdexcept>
#include <string>

namespace vseg {

enum class ErrorCode {
  // image_io
  MalformedHeader,
  UnsupportedMaxval,
  TruncatedData,
  IoFailure,
  NotAMask,
  // preprocess
  DegenerateDataset,
  DegenerateRange,
  InvalidGamma,
  // patches
  PatchLargerThanImage,
  StrideExceedsPatch,
  MissingPrediction,
  // nn
  ShapeMismatch,
  OddSpatialDims,
  ChannelMismatch,
  IndivisibleInput,
  BadMagic,
  VersionMismatch,
  NumericAbort,
  // train
  TooFewPatches,
  // eval
  DimMismatch,
  EmptyFov,
  SingleClass,
  BadK,
  // cli / dataset
  EmptyDataset,
  LayoutError,
  UnknownKey,
  InvalidValue,
  InvalidArgument,
};

const char* error_name(ErrorCode code) noexcept;

/// Exit-code class of an error: 1 usage, 2 data, 3 numeric abort.
int error_exit_code(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace vseg
