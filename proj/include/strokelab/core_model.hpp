#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace strokelab {

inline constexpr double kDefaultSampleRate = 2000.0;  // Hz
inline constexpr double kDefaultPitch = 0.020;        // m
inline constexpr std::size_t kDefaultChannels = 6;
inline constexpr double kMaxCarrierHz = 500.0;        // actuator bandwidth

enum class Axis : std::size_t { X = 0, Y = 1, Z = 2 };
inline constexpr std::size_t kAxes = 3;

// Sensor positions along the (1-D) stroke path, meters.
class ChannelLayout {
 public:
  // Throws Error(InvalidArgument) unless positions are strictly increasing,
  // there are at least 2 of them, and labels is empty or one per position.
  explicit ChannelLayout(std::vector<double> positions, std::vector<std::string> labels = {});

  // 6 channels at 0.020 m pitch, positions 0.000 .. 0.100 m.
  static ChannelLayout default_layout();
  static ChannelLayout uniform(std::size_t count, double pitch, double origin = 0.0);

  std::size_t size() const noexcept { return positions_.size(); }
  std::span<const double> positions() const noexcept { return positions_; }
  double position(std::size_t i) const { return positions_.at(i); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  // Mean spacing between adjacent channels.
  double mean_pitch() const noexcept;

  bool operator==(const ChannelLayout&) const = default;

 private:
  std::vector<double> positions_;
  std::vector<std::string> labels_;
};

using AxisSeries = std::vector<double>;
using ChannelSeries = std::array<AxisSeries, kAxes>;  // x, y, z in m/s^2
using Meta = std::map<std::string, std::string>;

// Unchecked recording payload. Use validate_recording() to inspect it and
// Recording to obtain a checked, immutable instance.
struct RecordingData {
  double sample_rate = kDefaultSampleRate;
  std::vector<ChannelSeries> channels;
  ChannelLayout layout = ChannelLayout::default_layout();
  Meta meta;
};

struct Violation {
  enum class Kind {
    NonPositiveSampleRate,
    ChannelCountMismatch,
    EmptySeries,
    LengthMismatch,
    NonFinite,
  };
  Kind kind;
  std::optional<std::size_t> channel;
  std::optional<std::size_t> axis;
  std::optional<std::size_t> sample;
  std::string message;
};

// Reports every invariant violation; first non-finite sample per axis only.
std::vector<Violation> validate_recording(const RecordingData& data);

// Immutable multi-channel 3-axis acceleration recording. Copies share the
// underlying buffers.
class Recording {
 public:
  // Throws Error(InvalidRecording) listing all violations.
  explicit Recording(RecordingData data);

  double sample_rate() const noexcept { return data_->sample_rate; }
  std::size_t channel_count() const noexcept { return data_->channels.size(); }
  std::size_t sample_count() const noexcept { return data_->channels.front()[0].size(); }
  double duration() const noexcept { return static_cast<double>(sample_count()) / sample_rate(); }
  const ChannelLayout& layout() const noexcept { return data_->layout; }
  const Meta& meta() const noexcept { return data_->meta; }
  const ChannelSeries& channel(std::size_t i) const { return data_->channels.at(i); }
  std::span<const double> axis(std::size_t channel, Axis a) const {
    return data_->channels.at(channel)[static_cast<std::size_t>(a)];
  }
  const RecordingData& data() const noexcept { return *data_; }

  // Returns a new recording with every sample multiplied by factor.
  Recording scaled(double factor) const;
  Recording with_meta(Meta meta) const;

  friend bool operator==(const Recording& a, const Recording& b);

 private:
  std::shared_ptr<const RecordingData> data_;
};

std::vector<Violation> validate_recording(const Recording& rec);

// Per-channel RMS intensity series. Sample k of every channel describes the
// analysis window starting at input sample k*hop; its timestamp is the window
// center, k/sample_rate + window_len/2.
struct Envelope {
  double sample_rate = 0.0;  // of the envelope series (input rate / hop)
  double window_len = 0.0;   // seconds
  std::size_t hop = 1;       // input samples per envelope sample
  std::vector<std::vector<double>> per_channel;

  std::size_t channel_count() const noexcept { return per_channel.size(); }
  std::size_t length() const noexcept { return per_channel.empty() ? 0 : per_channel.front().size(); }
  double time_of(std::size_t k) const noexcept {
    return static_cast<double>(k) / sample_rate + window_len / 2.0;
  }
  Envelope scaled(double factor) const;
  // Throws Error(InvalidArgument) on negative/non-finite values or ragged channels.
  void validate() const;
};

struct SpectrumStats {
  std::vector<double> bin_freqs;  // Hz, bin k = k * sample_rate / n_fft
  std::vector<double> mean;       // (m/s^2)^2/Hz
  std::vector<double> std;        // population standard deviation across members
  std::size_t frame_count = 0;    // channel-frames (spectra) aggregated
  std::size_t member_count = 0;   // channel spectra in the population

  void validate() const;
};

struct StrokeKinematics {
  double velocity = 0.0;  // m/s, positive = toward increasing position
  std::vector<double> peak_times;
  double duration = 0.0;   // s, always positive
  double r_squared = 0.0;
  double uniformity = 0.0; // coefficient of variation of segment velocities
  bool monotonic = true;   // false flags a multi-pass or invalid stroke
};

struct PropagationParams {
  double attenuation_length = 0.02;  // m, may be +inf
  double wave_speed = 5.0;           // m/s, may be +inf
  double noise_sigma = 0.0;          // m/s^2

  void validate() const;
};

struct CarrierComponent {
  double frequency = 0.0;  // Hz
  double amplitude = 0.0;
  bool operator==(const CarrierComponent&) const = default;
};

struct CarrierSpec {
  std::vector<CarrierComponent> components;

  void validate() const;
  // Same frequencies, amplitudes rescaled so sqrt(sum A^2) == 1.
  CarrierSpec normalized() const;
  bool operator==(const CarrierSpec&) const = default;
};

struct Activation {
  double onset = 0.0;           // s
  double duration = 0.1;        // s
  double peak_amplitude = 1.0;  // m/s^2
  double ramp_fraction = 0.25;  // raised-cosine ramp length / duration, [0, 0.5]
  bool operator==(const Activation&) const = default;
};

struct ActuationSequence {
  std::vector<double> actuator_positions;  // m, strictly increasing
  std::vector<Activation> activations;     // one per actuator
  CarrierSpec carrier;

  void validate() const;
  // Onsets non-decreasing in actuator order.
  bool is_forward() const;
  ActuationSequence scaled(double factor) const;
  bool operator==(const ActuationSequence&) const = default;

  // One actuator per layout channel with evenly spaced onsets. earliest_onset
  // is the smallest onset; a negative soa runs the sequence from the last
  // actuator back to the first.
  static ActuationSequence uniform(const ChannelLayout& layout, double earliest_onset, double soa,
                                   double duration, double peak_amplitude, CarrierSpec carrier,
                                   double ramp_fraction = 0.25);
};

}  // namespace strokelab
