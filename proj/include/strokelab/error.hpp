#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace strokelab {

enum class Errc {
  InvalidArgument,
  InvalidRecording,
  // daq_ingest
  BadSync,
  BadCrc,
  CodeOutOfRange,
  UnsupportedFrameType,
  EmptyStream,
  GapTooLarge,
  MalformedHeader,
  VersionUnsupported,
  TruncatedData,
  // dsp / kinematics
  TooShort,
  EmptyInput,
  NonMonotonicPeaks,
  FlatChannel,
  ZeroTimeSpread,
  // propagation / fitting
  BandLimit,
  DegenerateTarget,
};

std::string_view errc_name(Errc code);

// All recoverable failures in the library surface as this exception type;
// code() identifies the failure class for callers that need to branch on it.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace strokelab
