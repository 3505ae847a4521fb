#include "strokelab/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "strokelab/error.hpp"

namespace strokelab {

namespace {

const char* axis_name(std::size_t a) {
  static constexpr const char* names[] = {"x", "y", "z"};
  return a < kAxes ? names[a] : "?";
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::InvalidArgument, what);
}

}  // namespace

ChannelLayout::ChannelLayout(std::vector<double> positions, std::vector<std::string> labels)
    : positions_(std::move(positions)), labels_(std::move(labels)) {
  require(positions_.size() >= 2, "layout needs at least 2 channels");
  for (double p : positions_) require(std::isfinite(p), "layout positions must be finite");
  for (std::size_t i = 1; i < positions_.size(); ++i) {
    require(positions_[i] > positions_[i - 1], "layout positions must be strictly increasing");
  }
  require(labels_.empty() || labels_.size() == positions_.size(),
          "layout labels must be empty or one per channel");
}

ChannelLayout ChannelLayout::default_layout() {
  return uniform(kDefaultChannels, kDefaultPitch);
}

ChannelLayout ChannelLayout::uniform(std::size_t count, double pitch, double origin) {
  std::vector<double> positions(count);
  for (std::size_t i = 0; i < count; ++i) positions[i] = origin + pitch * static_cast<double>(i);
  return ChannelLayout(std::move(positions));
}

double ChannelLayout::mean_pitch() const noexcept {
  return (positions_.back() - positions_.front()) / static_cast<double>(positions_.size() - 1);
}

std::vector<Violation> validate_recording(const RecordingData& data) {
  std::vector<Violation> out;
  if (!(data.sample_rate > 0.0) || !std::isfinite(data.sample_rate)) {
    out.push_back({Violation::Kind::NonPositiveSampleRate, {}, {}, {},
                   "sample rate must be positive and finite"});
  }
  if (data.channels.size() != data.layout.size()) {
    std::ostringstream msg;
    msg << "recording has " << data.channels.size() << " channels but layout has "
        << data.layout.size();
    out.push_back({Violation::Kind::ChannelCountMismatch, {}, {}, {}, msg.str()});
  }
  std::optional<std::size_t> reference_len;
  for (std::size_t c = 0; c < data.channels.size(); ++c) {
    for (std::size_t a = 0; a < kAxes; ++a) {
      const auto& series = data.channels[c][a];
      std::ostringstream where;
      where << "channel " << c << " axis " << axis_name(a);
      if (series.empty()) {
        out.push_back({Violation::Kind::EmptySeries, c, a, {}, where.str() + " is empty"});
      } else if (!reference_len) {
        reference_len = series.size();
      } else if (series.size() != *reference_len) {
        std::ostringstream msg;
        msg << where.str() << " has " << series.size() << " samples, expected " << *reference_len;
        out.push_back({Violation::Kind::LengthMismatch, c, a, {}, msg.str()});
      }
      auto bad = std::find_if(series.begin(), series.end(), [](double v) { return !std::isfinite(v); });
      if (bad != series.end()) {
        const auto k = static_cast<std::size_t>(bad - series.begin());
        std::ostringstream msg;
        msg << where.str() << " sample " << k << " is not finite";
        out.push_back({Violation::Kind::NonFinite, c, a, k, msg.str()});
      }
    }
  }
  return out;
}

std::vector<Violation> validate_recording(const Recording& rec) {
  return validate_recording(rec.data());
}

Recording::Recording(RecordingData data) {
  auto violations = validate_recording(data);
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << violations.size() << " violation(s)";
    for (const auto& v : violations) msg << "; " << v.message;
    throw Error(Errc::InvalidRecording, msg.str());
  }
  data_ = std::make_shared<const RecordingData>(std::move(data));
}

Recording Recording::scaled(double factor) const {
  RecordingData copy = *data_;
  for (auto& ch : copy.channels) {
    for (auto& axis : ch) {
      for (double& v : axis) v *= factor;
    }
  }
  return Recording(std::move(copy));
}

Recording Recording::with_meta(Meta meta) const {
  RecordingData copy = *data_;
  copy.meta = std::move(meta);
  return Recording(std::move(copy));
}

bool operator==(const Recording& a, const Recording& b) {
  if (a.data_ == b.data_) return true;
  const auto& x = *a.data_;
  const auto& y = *b.data_;
  return x.sample_rate == y.sample_rate && x.layout == y.layout && x.meta == y.meta &&
         x.channels == y.channels;
}

Envelope Envelope::scaled(double factor) const {
  Envelope out = *this;
  const double mag = std::abs(factor);
  for (auto& ch : out.per_channel) {
    for (double& v : ch) v *= mag;
  }
  return out;
}

void Envelope::validate() const {
  require(sample_rate > 0.0, "envelope sample rate must be positive");
  require(window_len >= 0.0, "envelope window length must be non-negative");
  require(hop >= 1, "envelope hop must be >= 1");
  for (const auto& ch : per_channel) {
    require(ch.size() == length(), "envelope channels must have equal length");
    for (double v : ch) require(std::isfinite(v) && v >= 0.0, "envelope values must be finite and >= 0");
  }
}

void SpectrumStats::validate() const {
  require(frame_count > 0, "spectrum stats need at least one frame");
  require(mean.size() == bin_freqs.size() && std.size() == bin_freqs.size(),
          "spectrum stats arrays must have equal length");
  for (std::size_t k = 0; k < bin_freqs.size(); ++k) {
    require(mean[k] >= 0.0 && std[k] >= 0.0, "spectrum mean/std must be >= 0");
    if (k > 0) require(bin_freqs[k] > bin_freqs[k - 1], "bin frequencies must ascend");
  }
}

void PropagationParams::validate() const {
  require(attenuation_length > 0.0, "attenuation length must be > 0");
  require(wave_speed > 0.0, "wave speed must be > 0");
  require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), "noise sigma must be finite and >= 0");
}

void CarrierSpec::validate() const {
  require(!components.empty(), "carrier needs at least one component");
  for (const auto& c : components) {
    require(c.frequency > 0.0 && c.frequency <= kMaxCarrierHz,
            "carrier frequencies must lie in (0, 500] Hz");
    require(c.amplitude >= 0.0 && std::isfinite(c.amplitude), "carrier amplitudes must be >= 0");
  }
}

CarrierSpec CarrierSpec::normalized() const {
  double energy = 0.0;
  for (const auto& c : components) energy += c.amplitude * c.amplitude;
  CarrierSpec out = *this;
  if (energy > 0.0) {
    const double scale = 1.0 / std::sqrt(energy);
    for (auto& c : out.components) c.amplitude *= scale;
  }
  return out;
}

void ActuationSequence::validate() const {
  require(!actuator_positions.empty(), "sequence needs at least one actuator");
  require(activations.size() == actuator_positions.size(), "one activation per actuator required");
  for (std::size_t i = 1; i < actuator_positions.size(); ++i) {
    require(actuator_positions[i] > actuator_positions[i - 1],
            "actuator positions must be strictly increasing");
  }
  for (const auto& a : activations) {
    require(std::isfinite(a.onset), "activation onset must be finite");
    require(a.duration > 0.0 && std::isfinite(a.duration), "activation duration must be > 0");
    require(a.peak_amplitude >= 0.0 && std::isfinite(a.peak_amplitude),
            "activation amplitude must be >= 0");
    require(a.ramp_fraction >= 0.0 && a.ramp_fraction <= 0.5, "ramp fraction must lie in [0, 0.5]");
  }
  carrier.validate();
}

bool ActuationSequence::is_forward() const {
  return std::is_sorted(activations.begin(), activations.end(),
                        [](const Activation& a, const Activation& b) { return a.onset < b.onset; });
}

ActuationSequence ActuationSequence::scaled(double factor) const {
  ActuationSequence out = *this;
  for (auto& a : out.activations) a.peak_amplitude *= factor;
  return out;
}

ActuationSequence ActuationSequence::uniform(const ChannelLayout& layout, double earliest_onset,
                                             double soa, double duration, double peak_amplitude,
                                             CarrierSpec carrier, double ramp_fraction) {
  ActuationSequence seq;
  const std::size_t n = layout.size();
  seq.actuator_positions.assign(layout.positions().begin(), layout.positions().end());
  seq.activations.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double rank = soa >= 0.0 ? static_cast<double>(j) : static_cast<double>(n - 1 - j);
    seq.activations[j] = {earliest_onset + rank * std::abs(soa), duration, peak_amplitude, ramp_fraction};
  }
  seq.carrier = std::move(carrier);
  seq.validate();
  return seq;
}

}  // namespace strokelab
