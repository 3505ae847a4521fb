#pragma once

// Acquisition stream decoding and the .htrec recording container.
//
// Wire format of one data frame (little-endian, 43 bytes):
//
//   offset  size  field
//   0       2     sync 0xAA 0x55
//   2       1     type (0x01 = data)
//   3       2     seq, u16
//   5       36    18 x u16 ADC codes, sensor-major (s0x s0y s0z s1x ...), low 10 bits used
//   41      2     CRC-16/CCITT-FALSE over bytes 2..40
//
// No anti-alias filtering is modelled or applied on ingest.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "strokelab/core_model.hpp"

namespace strokelab::daq {

inline constexpr std::size_t kFrameSize = 43;
inline constexpr std::size_t kSensors = 6;
inline constexpr std::size_t kCodesPerFrame = kSensors * kAxes;
inline constexpr std::uint16_t kMaxCode = 1023;
inline constexpr std::uint8_t kSync0 = 0xAA;
inline constexpr std::uint8_t kSync1 = 0x55;
inline constexpr std::uint8_t kTypeData = 0x01;
inline constexpr std::size_t kMaxGapFrames = 16;

using FrameBytes = std::array<std::uint8_t, kFrameSize>;

struct Frame {
  std::uint16_t seq = 0;
  std::array<std::uint16_t, kCodesPerFrame> samples{};

  std::uint16_t code(std::size_t sensor, std::size_t axis) const { return samples.at(sensor * kAxes + axis); }
  bool operator==(const Frame&) const = default;
};

// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, xorout 0.
std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> bytes);

// Throws Error(CodeOutOfRange) if any code exceeds 1023.
FrameBytes encode_frame(const Frame& frame);

// Throws Error(InvalidArgument) unless exactly 43 bytes, then BadSync, BadCrc,
// UnsupportedFrameType or CodeOutOfRange, checked in that order.
Frame decode_frame(std::span<const std::uint8_t> bytes);

// Smallest offset at which a complete frame with valid sync and CRC begins;
// nullopt at end of stream.
std::optional<std::size_t> resync(std::span<const std::uint8_t> stream);

struct StreamDecode {
  std::vector<Frame> frames;
  std::size_t resync_events = 0;  // times the decoder had to skip bytes
  std::size_t skipped_bytes = 0;
};

StreamDecode decode_stream(std::span<const std::uint8_t> stream);
std::vector<std::uint8_t> encode_stream(std::span<const Frame> frames);

struct CalibrationParams {
  double v_ref = 3.3;                            // V
  std::array<double, kAxes> v_zero_g{1.65, 1.65, 1.65};  // V, per axis
  double sensitivity = 0.300;                    // V/g
  double g = 9.80665;                            // m/s^2

  void validate() const;
  // ((code / 1023) * v_ref - v_zero_g[axis]) / sensitivity * g
  double to_accel(std::uint16_t code, std::size_t axis) const;
  // Nearest code for an acceleration, clamped to 0..1023.
  std::uint16_t to_code(double accel, std::size_t axis) const;
  bool operator==(const CalibrationParams&) const = default;
};

struct Gap {
  std::size_t after_sample = 0;  // index of the last sample before the gap
  std::size_t missing = 0;       // frames synthesized by interpolation
};

struct IngestResult {
  Recording recording;
  std::vector<Gap> gaps;
  std::size_t duplicates = 0;  // frames dropped for repeating a sequence number

  std::size_t interpolated_frames() const;
};

// Converts codes to m/s^2 and fills sequence gaps of up to 16 frames by
// linear interpolation. Throws EmptyStream, GapTooLarge.
IngestResult frames_to_recording(std::span<const Frame> frames, const CalibrationParams& cal,
                                 const ChannelLayout& layout, double sample_rate = kDefaultSampleRate);

enum class BodyFormat { Csv, Binary };

struct RecordingFile {
  Recording recording;
  std::optional<CalibrationParams> calibration;
  BodyFormat body = BodyFormat::Csv;
};

inline constexpr int kFileVersion = 1;

void write_recording_file(const Recording& rec, const std::filesystem::path& path,
                          BodyFormat body = BodyFormat::Csv,
                          const std::optional<CalibrationParams>& calibration = std::nullopt);

// Throws MalformedHeader, VersionUnsupported, TruncatedData.
RecordingFile read_recording_container(const std::filesystem::path& path);
Recording read_recording_file(const std::filesystem::path& path);

// Plain acceleration CSV (time_s, ch0_x, ch0_y, ch0_z, ...), m/s^2. Sample
// rate is taken from the time column. Throws MalformedHeader, TruncatedData.
Recording read_acceleration_csv(const std::filesystem::path& path,
                                std::optional<ChannelLayout> layout = std::nullopt);

}  // namespace strokelab::daq
