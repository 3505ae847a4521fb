#include "strokelab/error.hpp"

namespace strokelab {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidRecording: return "InvalidRecording";
    case Errc::BadSync: return "BadSync";
    case Errc::BadCrc: return "BadCrc";
    case Errc::CodeOutOfRange: return "CodeOutOfRange";
    case Errc::UnsupportedFrameType: return "UnsupportedFrameType";
    case Errc::EmptyStream: return "EmptyStream";
    case Errc::GapTooLarge: return "GapTooLarge";
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::VersionUnsupported: return "VersionUnsupported";
    case Errc::TruncatedData: return "TruncatedData";
    case Errc::TooShort: return "TooShort";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::NonMonotonicPeaks: return "NonMonotonicPeaks";
    case Errc::FlatChannel: return "FlatChannel";
    case Errc::ZeroTimeSpread: return "ZeroTimeSpread";
    case Errc::BandLimit: return "BandLimit";
    case Errc::DegenerateTarget: return "DegenerateTarget";
  }
  return "Unknown";
}

}  // namespace strokelab
