#include "strokelab/daq_ingest.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "strokelab/error.hpp"
#include "text_util.hpp"

namespace strokelab::daq {

namespace {

constexpr std::size_t kCrcBegin = 2;
constexpr std::size_t kCrcEnd = kFrameSize - 2;

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void write_u16(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v & 0xFF);
  p[1] = static_cast<std::uint8_t>(v >> 8);
}

bool frame_valid_at(std::span<const std::uint8_t> stream, std::size_t offset) {
  if (stream.size() - offset < kFrameSize) return false;
  const std::uint8_t* p = stream.data() + offset;
  if (p[0] != kSync0 || p[1] != kSync1) return false;
  return crc16_ccitt_false({p + kCrcBegin, kCrcEnd - kCrcBegin}) == read_u16(p + kCrcEnd);
}

}  // namespace

std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> bytes) {
  std::uint16_t crc = 0xFFFF;
  for (std::uint8_t b : bytes) {
    crc ^= static_cast<std::uint16_t>(b << 8);
    for (int i = 0; i < 8; ++i) {
      crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                           : static_cast<std::uint16_t>(crc << 1);
    }
  }
  return crc;
}

FrameBytes encode_frame(const Frame& frame) {
  FrameBytes out{};
  out[0] = kSync0;
  out[1] = kSync1;
  out[2] = kTypeData;
  write_u16(&out[3], frame.seq);
  for (std::size_t i = 0; i < kCodesPerFrame; ++i) {
    if (frame.samples[i] > kMaxCode) {
      throw Error(Errc::CodeOutOfRange, "code " + std::to_string(frame.samples[i]) + " at slot " +
                                            std::to_string(i) + " exceeds 1023");
    }
    write_u16(&out[5 + 2 * i], frame.samples[i]);
  }
  write_u16(&out[kCrcEnd], crc16_ccitt_false({out.data() + kCrcBegin, kCrcEnd - kCrcBegin}));
  return out;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kFrameSize) {
    throw Error(Errc::InvalidArgument,
                "frame must be 43 bytes, got " + std::to_string(bytes.size()));
  }
  if (bytes[0] != kSync0 || bytes[1] != kSync1) throw Error(Errc::BadSync, "missing 0xAA 0x55");
  const std::uint16_t expected = crc16_ccitt_false(bytes.subspan(kCrcBegin, kCrcEnd - kCrcBegin));
  const std::uint16_t stored = read_u16(&bytes[kCrcEnd]);
  if (expected != stored) throw Error(Errc::BadCrc, "frame checksum mismatch");
  if (bytes[2] != kTypeData) {
    throw Error(Errc::UnsupportedFrameType, "frame type " + std::to_string(bytes[2]));
  }
  Frame frame;
  frame.seq = read_u16(&bytes[3]);
  for (std::size_t i = 0; i < kCodesPerFrame; ++i) {
    frame.samples[i] = read_u16(&bytes[5 + 2 * i]);
    if (frame.samples[i] > kMaxCode) {
      throw Error(Errc::CodeOutOfRange, "decoded code " + std::to_string(frame.samples[i]) +
                                            " at slot " + std::to_string(i));
    }
  }
  return frame;
}

std::optional<std::size_t> resync(std::span<const std::uint8_t> stream) {
  for (std::size_t off = 0; off + kFrameSize <= stream.size(); ++off) {
    if (frame_valid_at(stream, off)) return off;
  }
  return std::nullopt;
}

StreamDecode decode_stream(std::span<const std::uint8_t> stream) {
  StreamDecode out;
  std::size_t pos = 0;
  while (pos < stream.size()) {
    if (!frame_valid_at(stream, pos)) {
      auto next = resync(stream.subspan(pos));
      const std::size_t skip = next ? *next : stream.size() - pos;
      ++out.resync_events;
      out.skipped_bytes += skip;
      if (!next) break;
      pos += skip;
    }
    try {
      out.frames.push_back(decode_frame(stream.subspan(pos, kFrameSize)));
      pos += kFrameSize;
    } catch (const Error&) {
      // CRC-valid but not a usable data frame; step past its sync bytes.
      ++out.resync_events;
      out.skipped_bytes += 1;
      pos += 1;
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_stream(std::span<const Frame> frames) {
  std::vector<std::uint8_t> out;
  out.reserve(frames.size() * kFrameSize);
  for (const auto& f : frames) {
    const auto bytes = encode_frame(f);
    out.insert(out.end(), bytes.begin(), bytes.end());
  }
  return out;
}

void CalibrationParams::validate() const {
  if (!(v_ref > 0.0)) throw Error(Errc::InvalidArgument, "v_ref must be > 0");
  if (!(sensitivity > 0.0)) throw Error(Errc::InvalidArgument, "sensitivity must be > 0");
  if (!(g > 0.0)) throw Error(Errc::InvalidArgument, "g must be > 0");
  for (double z : v_zero_g) {
    if (!(z >= 0.0 && z <= v_ref)) throw Error(Errc::InvalidArgument, "v_zero_g must lie in [0, v_ref]");
  }
}

double CalibrationParams::to_accel(std::uint16_t code, std::size_t axis) const {
  const double volts = static_cast<double>(code) / static_cast<double>(kMaxCode) * v_ref;
  return (volts - v_zero_g.at(axis)) / sensitivity * g;
}

std::uint16_t CalibrationParams::to_code(double accel, std::size_t axis) const {
  const double volts = accel / g * sensitivity + v_zero_g.at(axis);
  const double code = std::round(volts / v_ref * static_cast<double>(kMaxCode));
  return static_cast<std::uint16_t>(std::clamp(code, 0.0, static_cast<double>(kMaxCode)));
}

std::size_t IngestResult::interpolated_frames() const {
  std::size_t n = 0;
  for (const auto& g : gaps) n += g.missing;
  return n;
}

IngestResult frames_to_recording(std::span<const Frame> frames, const CalibrationParams& cal,
                                 const ChannelLayout& layout, double sample_rate) {
  if (frames.empty()) throw Error(Errc::EmptyStream, "no frames to convert");
  cal.validate();
  if (layout.size() != kSensors) {
    throw Error(Errc::InvalidArgument, "frame stream carries 6 sensors, layout has " +
                                           std::to_string(layout.size()));
  }

  RecordingData data;
  data.sample_rate = sample_rate;
  data.layout = layout;
  data.channels.resize(kSensors);
  std::vector<Gap> gaps;
  std::size_t duplicates = 0;

  auto append = [&](const Frame& f) {
    for (std::size_t s = 0; s < kSensors; ++s) {
      for (std::size_t a = 0; a < kAxes; ++a) data.channels[s][a].push_back(cal.to_accel(f.code(s, a), a));
    }
  };

  append(frames.front());
  std::uint16_t prev_seq = frames.front().seq;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const Frame& f = frames[i];
    const auto step = static_cast<std::uint16_t>(f.seq - prev_seq);
    if (step == 0) {
      ++duplicates;
      continue;
    }
    const std::size_t missing = step - 1u;
    if (missing > kMaxGapFrames) {
      throw Error(Errc::GapTooLarge, std::to_string(missing) + " frames missing after seq " +
                                         std::to_string(prev_seq));
    }
    if (missing > 0) {
      const std::size_t last = data.channels[0][0].size() - 1;
      gaps.push_back({last, missing});
      for (std::size_t s = 0; s < kSensors; ++s) {
        for (std::size_t a = 0; a < kAxes; ++a) {
          auto& series = data.channels[s][a];
          const double from = series[last];
          const double to = cal.to_accel(f.code(s, a), a);
          for (std::size_t m = 1; m <= missing; ++m) {
            const double t = static_cast<double>(m) / static_cast<double>(missing + 1);
            series.push_back(from + (to - from) * t);
          }
        }
      }
    }
    append(f);
    prev_seq = f.seq;
  }
  return {Recording(std::move(data)), std::move(gaps), duplicates};
}

// ---------------------------------------------------------------------------
// .htrec container
//
//   HTREC <version>
//   channels <n>
//   samples <count>
//   sample_rate <hz>
//   positions <p0> <p1> ...
//   [labels <l0> <l1> ...]
//   [calibration <v_ref> <vzx> <vzy> <vzz> <sensitivity> <g>]
//   [meta <key> <value>]...
//   body csv|binary
//   end
//   <body>
//
// Tokens are percent-escaped. The CSV body has a column header line followed
// by one row per sample; the binary body is little-endian float64, sample-major
// (all channels' x,y,z for sample 0, then sample 1, ...).

namespace {

using detail::format_double;
using detail::parse_double;

std::string column_header(std::size_t channels) {
  std::string out = "time_s";
  static constexpr const char* axes[] = {"x", "y", "z"};
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t a = 0; a < kAxes; ++a) out += ",ch" + std::to_string(c) + "_" + axes[a];
  }
  return out;
}

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  for (auto t : detail::split(line, ' ')) {
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

[[noreturn]] void malformed(const std::string& what) { throw Error(Errc::MalformedHeader, what); }
[[noreturn]] void truncated(const std::string& what) { throw Error(Errc::TruncatedData, what); }

double header_double(std::string_view tok, const char* field) {
  auto v = parse_double(tok);
  if (!v) malformed(std::string("bad number in '") + field + "'");
  return *v;
}

std::size_t header_size(std::string_view tok, const char* field) {
  std::size_t v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    malformed(std::string("bad integer in '") + field + "'");
  }
  return v;
}

void put_f64(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out += static_cast<char>((bits >> (8 * i)) & 0xFF);
}

double get_f64(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_recording_file(const Recording& rec, const std::filesystem::path& path, BodyFormat body,
                          const std::optional<CalibrationParams>& calibration) {
  std::string out;
  const std::size_t channels = rec.channel_count();
  const std::size_t samples = rec.sample_count();
  out += "HTREC " + std::to_string(kFileVersion) + "\n";
  out += "channels " + std::to_string(channels) + "\n";
  out += "samples " + std::to_string(samples) + "\n";
  out += "sample_rate " + format_double(rec.sample_rate()) + "\n";
  out += "positions";
  for (double p : rec.layout().positions()) out += " " + format_double(p);
  out += "\n";
  if (!rec.layout().labels().empty()) {
    out += "labels";
    for (const auto& l : rec.layout().labels()) out += " " + detail::escape_token(l);
    out += "\n";
  }
  if (calibration) {
    out += "calibration " + format_double(calibration->v_ref);
    for (double z : calibration->v_zero_g) out += " " + format_double(z);
    out += " " + format_double(calibration->sensitivity) + " " + format_double(calibration->g) + "\n";
  }
  for (const auto& [k, v] : rec.meta()) {
    out += "meta " + detail::escape_token(k) + " " + detail::escape_token(v) + "\n";
  }
  out += body == BodyFormat::Csv ? "body csv\n" : "body binary\n";
  out += "end\n";

  if (body == BodyFormat::Csv) {
    out += column_header(channels) + "\n";
    for (std::size_t k = 0; k < samples; ++k) {
      out += format_double(static_cast<double>(k) / rec.sample_rate());
      for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t a = 0; a < kAxes; ++a) {
          out += ',';
          out += format_double(rec.channel(c)[a][k]);
        }
      }
      out += '\n';
    }
  } else {
    out.reserve(out.size() + samples * channels * kAxes * 8);
    for (std::size_t k = 0; k < samples; ++k) {
      for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t a = 0; a < kAxes; ++a) put_f64(out, rec.channel(c)[a][k]);
      }
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::InvalidArgument, "cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(Errc::InvalidArgument, "failed writing " + path.string());
}

RecordingFile read_recording_container(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::InvalidArgument, "cannot open " + path.string());
  const std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  auto next_line = [&]() -> std::optional<std::string_view> {
    if (pos >= content.size()) return std::nullopt;
    auto nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    std::string_view line(content.data() + pos, nl - pos);
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };

  auto first = next_line();
  if (!first) malformed("empty file");
  auto magic = tokens(*first);
  if (magic.size() != 2 || magic[0] != "HTREC") malformed("missing HTREC magic");
  if (header_size(magic[1], "HTREC") != static_cast<std::size_t>(kFileVersion)) {
    throw Error(Errc::VersionUnsupported, "container version " + std::string(magic[1]));
  }

  std::optional<std::size_t> channels, samples;
  std::optional<double> sample_rate;
  std::vector<double> positions;
  std::vector<std::string> labels;
  std::optional<CalibrationParams> calibration;
  std::optional<BodyFormat> body;
  Meta meta;
  bool ended = false;

  while (auto line = next_line()) {
    auto tok = tokens(*line);
    if (tok.empty()) continue;
    const auto key = tok[0];
    if (key == "end") {
      ended = true;
      break;
    } else if (key == "channels" && tok.size() == 2) {
      channels = header_size(tok[1], "channels");
    } else if (key == "samples" && tok.size() == 2) {
      samples = header_size(tok[1], "samples");
    } else if (key == "sample_rate" && tok.size() == 2) {
      sample_rate = header_double(tok[1], "sample_rate");
    } else if (key == "positions") {
      for (std::size_t i = 1; i < tok.size(); ++i) positions.push_back(header_double(tok[i], "positions"));
    } else if (key == "labels") {
      for (std::size_t i = 1; i < tok.size(); ++i) {
        auto l = detail::unescape_token(tok[i]);
        if (!l) malformed("bad label escape");
        labels.push_back(*l);
      }
    } else if (key == "calibration" && tok.size() == 7) {
      CalibrationParams cal;
      cal.v_ref = header_double(tok[1], "calibration");
      for (std::size_t a = 0; a < kAxes; ++a) cal.v_zero_g[a] = header_double(tok[2 + a], "calibration");
      cal.sensitivity = header_double(tok[5], "calibration");
      cal.g = header_double(tok[6], "calibration");
      calibration = cal;
    } else if (key == "meta" && tok.size() == 3) {
      auto k = detail::unescape_token(tok[1]);
      auto v = detail::unescape_token(tok[2]);
      if (!k || !v) malformed("bad meta escape");
      meta[*k] = *v;
    } else if (key == "body" && tok.size() == 2) {
      if (tok[1] == "csv") body = BodyFormat::Csv;
      else if (tok[1] == "binary") body = BodyFormat::Binary;
      else malformed("unknown body kind");
    } else {
      malformed("unrecognized header line '" + std::string(*line) + "'");
    }
  }
  if (!ended) malformed("header not terminated by 'end'");
  if (!channels || !samples || !sample_rate || !body) malformed("header missing required field");
  if (positions.size() != *channels) malformed("positions count does not match channels");
  if (*samples == 0) malformed("recording must hold at least one sample");

  std::optional<ChannelLayout> layout;
  try {
    layout.emplace(positions, labels);
  } catch (const Error& e) {
    malformed(e.what());
  }

  RecordingData data;
  data.sample_rate = *sample_rate;
  data.layout = *layout;
  data.meta = std::move(meta);
  data.channels.resize(*channels);
  for (auto& ch : data.channels) {
    for (auto& axis : ch) axis.reserve(*samples);
  }

  const std::size_t width = *channels * kAxes;
  if (*body == BodyFormat::Csv) {
    auto header = next_line();
    if (!header) truncated("missing CSV column header");
    const auto names = detail::split(*header, ',');
    if (names.size() != width + 1) {
      truncated("CSV has " + std::to_string(names.size()) + " columns, header declares " +
                std::to_string(width + 1));
    }
    for (std::size_t k = 0; k < *samples; ++k) {
      auto line = next_line();
      if (!line || line->empty()) truncated("CSV body ends at row " + std::to_string(k));
      const auto cells = detail::split(*line, ',');
      if (cells.size() != width + 1) truncated("row " + std::to_string(k) + " has wrong column count");
      for (std::size_t i = 0; i < width; ++i) {
        auto v = parse_double(cells[i + 1]);
        if (!v) truncated("unparsable value at row " + std::to_string(k));
        data.channels[i / kAxes][i % kAxes].push_back(*v);
      }
    }
  } else {
    const std::size_t need = *samples * width * 8;
    if (content.size() - std::min(pos, content.size()) < need) truncated("binary body too short");
    const char* p = content.data() + pos;
    for (std::size_t k = 0; k < *samples; ++k) {
      for (std::size_t i = 0; i < width; ++i, p += 8) data.channels[i / kAxes][i % kAxes].push_back(get_f64(p));
    }
  }

  try {
    return {Recording(std::move(data)), calibration, *body};
  } catch (const Error& e) {
    truncated(e.what());
  }
}

Recording read_recording_file(const std::filesystem::path& path) {
  return read_recording_container(path).recording;
}

Recording read_acceleration_csv(const std::filesystem::path& path, std::optional<ChannelLayout> layout) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::InvalidArgument, "cannot open " + path.string());
  std::string line;
  if (!std::getline(f, line)) malformed("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto names = detail::split(line, ',');
  if (names.size() < 1 + 2 * kAxes || (names.size() - 1) % kAxes != 0 || names[0] != "time_s") {
    malformed("expected columns time_s, ch0_x, ch0_y, ch0_z, ...");
  }
  const std::size_t channels = (names.size() - 1) / kAxes;
  if (line != column_header(channels)) {
    malformed("unexpected column names");
  }

  std::vector<double> times;
  RecordingData data;
  data.channels.resize(channels);
  std::size_t row = 0;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != names.size()) truncated("row " + std::to_string(row) + " has wrong column count");
    auto t = parse_double(cells[0]);
    if (!t) truncated("bad time at row " + std::to_string(row));
    times.push_back(*t);
    for (std::size_t i = 1; i < cells.size(); ++i) {
      auto v = parse_double(cells[i]);
      if (!v) truncated("bad value at row " + std::to_string(row));
      data.channels[(i - 1) / kAxes][(i - 1) % kAxes].push_back(*v);
    }
    ++row;
  }
  if (times.size() < 2) truncated("need at least two rows to infer the sample rate");
  const double span = times.back() - times.front();
  if (!(span > 0.0)) malformed("time column must increase");
  data.sample_rate = static_cast<double>(times.size() - 1) / span;
  data.layout = layout ? *layout
                       : (channels == kDefaultChannels ? ChannelLayout::default_layout()
                                                       : ChannelLayout::uniform(channels, kDefaultPitch));
  return Recording(std::move(data));
}

}  // namespace strokelab::daq
