#include "strokelab/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "strokelab/error.hpp"

namespace strokelab::propagation {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent noise substream per channel so channels can be rendered in any
// order with identical results.
std::mt19937_64 channel_stream(std::uint64_t seed, std::size_t channel) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(0xC0FFEEull + channel)));
}

void check_band(const CarrierSpec& carrier, double sample_rate) {
  for (const auto& c : carrier.components) {
    if (c.frequency > kMaxCarrierHz || c.frequency > sample_rate / 2.0) {
      throw Error(Errc::BandLimit, "carrier component at " + std::to_string(c.frequency) +
                                       " Hz exceeds the rendering band");
    }
  }
}

Recording to_recording(std::vector<std::vector<double>> scalar, const PropagationParams& params,
                       const SensorSetup& setup, std::uint64_t seed) {
  RecordingData data;
  data.sample_rate = setup.sample_rate;
  data.layout = setup.layout;
  data.channels.resize(scalar.size());
  for (std::size_t c = 0; c < scalar.size(); ++c) {
    auto rng = channel_stream(seed, c);
    std::normal_distribution<double> noise(0.0, params.noise_sigma > 0.0 ? params.noise_sigma : 1.0);
    for (std::size_t a = 0; a < kAxes; ++a) {
      auto& axis = data.channels[c][a];
      axis.resize(scalar[c].size());
      const double u = setup.axes_split[a];
      for (std::size_t k = 0; k < axis.size(); ++k) axis[k] = u * scalar[c][k];
      if (params.noise_sigma > 0.0) {
        for (double& v : axis) v += noise(rng);
      }
    }
  }
  return Recording(std::move(data));
}

}  // namespace

std::array<double, kAxes> default_axes_split() {
  const std::array<double, kAxes> raw{0.26, 0.53, 0.80};
  const double norm = std::sqrt(raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2]);
  return {raw[0] / norm, raw[1] / norm, raw[2] / norm};
}

void SensorSetup::validate() const {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) throw Error(Errc::InvalidArgument, "sample rate must be positive");
  const double n2 = axes_split[0] * axes_split[0] + axes_split[1] * axes_split[1] + axes_split[2] * axes_split[2];
  if (std::abs(n2 - 1.0) > 1e-9) throw Error(Errc::InvalidArgument, "axes split must be a unit vector");
}

void StrokeModel::validate() const {
  if (start_pos == end_pos) throw Error(Errc::InvalidArgument, "stroke start and end must differ");
  if (!(velocity != 0.0) || !std::isfinite(velocity) || (velocity > 0.0) != (end_pos > start_pos)) {
    throw Error(Errc::InvalidArgument, "stroke velocity sign must match end_pos - start_pos");
  }
  if (!(ramp_fraction >= 0.0 && ramp_fraction <= 0.5)) throw Error(Errc::InvalidArgument, "ramp fraction must lie in [0, 0.5]");
  if (!(pre_roll >= 0.0 && post_roll >= 0.0)) throw Error(Errc::InvalidArgument, "pre/post roll must be >= 0");
  carrier.validate();
}

double StrokeModel::contact_duration() const { return std::abs(end_pos - start_pos) / std::abs(velocity); }

CarrierSpec StrokeModel::default_caress_carrier() {
  // Broadband skin-friction content, energy falling with frequency.
  return CarrierSpec{{{40.0, 1.0}, {95.0, 0.6}, {180.0, 0.35}, {310.0, 0.2}}};
}

double raised_cosine_envelope(double tau, double duration, double ramp_fraction) {
  if (tau < 0.0 || tau > duration) return 0.0;
  const double ramp = ramp_fraction * duration;
  if (ramp <= 0.0) return 1.0;
  if (tau < ramp) return 0.5 - 0.5 * std::cos(std::numbers::pi * tau / ramp);
  if (tau > duration - ramp) return 0.5 - 0.5 * std::cos(std::numbers::pi * (duration - tau) / ramp);
  return 1.0;
}

double spatial_gain(double distance, const PropagationParams& params) {
  return std::exp(-distance / params.attenuation_length);
}

double travel_time(double distance, const PropagationParams& params) { return distance / params.wave_speed; }

Recording simulate_stroke(const StrokeModel& model, const PropagationParams& params, const SensorSetup& setup) {
  model.validate();
  params.validate();
  setup.validate();
  check_band(model.carrier, setup.sample_rate);

  const double fs = setup.sample_rate;
  const double contact = model.contact_duration();
  const auto n = static_cast<std::size_t>(std::llround((model.pre_roll + contact + model.post_roll) * fs));

  std::mt19937_64 phase_rng(splitmix64(model.seed));
  std::uniform_real_distribution<double> uniform_phase(0.0, kTwoPi);
  std::vector<double> phases;
  for (std::size_t j = 0; j < model.carrier.components.size(); ++j) phases.push_back(uniform_phase(phase_rng));

  auto source = [&](double t) {
    const double g = raised_cosine_envelope(t - model.pre_roll, contact, model.ramp_fraction);
    if (g == 0.0) return 0.0;
    double s = 0.0;
    for (std::size_t j = 0; j < phases.size(); ++j) {
      const auto& comp = model.carrier.components[j];
      s += comp.amplitude * std::sin(kTwoPi * comp.frequency * t + phases[j]);
    }
    return g * s;
  };
  const double lo = std::min(model.start_pos, model.end_pos);
  const double hi = std::max(model.start_pos, model.end_pos);

  std::vector<std::vector<double>> scalar(setup.layout.size(), std::vector<double>(n, 0.0));
  for (std::size_t c = 0; c < setup.layout.size(); ++c) {
    const double x = setup.layout.position(c);
    for (std::size_t k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) / fs;
      const double xs = std::clamp(model.start_pos + model.velocity * (t - model.pre_roll), lo, hi);
      const double d = std::abs(x - xs);
      scalar[c][k] = source(t - travel_time(d, params)) * spatial_gain(d, params);
    }
  }
  return to_recording(std::move(scalar), params, setup, model.seed);
}

Recording render_sequence(const ActuationSequence& seq, const PropagationParams& params,
                          const SensorSetup& setup, std::size_t n_samples, std::uint64_t seed) {
  check_band(seq.carrier, setup.sample_rate);
  seq.validate();
  params.validate();
  setup.validate();
  if (n_samples == 0) throw Error(Errc::InvalidArgument, "render length must be positive");

  const double fs = setup.sample_rate;
  const auto& comps = seq.carrier.components;
  std::vector<std::vector<double>> scalar(setup.layout.size(), std::vector<double>(n_samples, 0.0));
  for (std::size_t c = 0; c < setup.layout.size(); ++c) {
    const double x = setup.layout.position(c);
    auto& out = scalar[c];
    for (std::size_t j = 0; j < seq.activations.size(); ++j) {
      const auto& act = seq.activations[j];
      if (act.peak_amplitude == 0.0) continue;
      const double d = std::abs(x - seq.actuator_positions[j]);
      const double gain = act.peak_amplitude * spatial_gain(d, params);
      if (gain == 0.0) continue;
      const double delay = travel_time(d, params);
      const double begin = (act.onset + delay) * fs;
      const double end = (act.onset + delay + act.duration) * fs;
      if (end < 0.0) continue;
      const auto k0 = static_cast<std::size_t>(std::max(0.0, std::ceil(begin)));
      const auto k1 = static_cast<std::size_t>(std::min(static_cast<double>(n_samples - 1), std::floor(end)));
      for (std::size_t k = k0; k <= k1 && k < n_samples; ++k) {
        const double te = static_cast<double>(k) / fs - delay;  // emission time
        const double env = raised_cosine_envelope(te - act.onset, act.duration, act.ramp_fraction);
        if (env == 0.0) continue;
        double carrier = 0.0;
        for (const auto& comp : comps) carrier += comp.amplitude * std::sin(kTwoPi * comp.frequency * te);
        out[k] += gain * env * carrier;
      }
    }
  }
  return to_recording(std::move(scalar), params, setup, seed);
}

std::size_t render_length(const ActuationSequence& seq, const PropagationParams& params,
                          const SensorSetup& setup, double tail) {
  double latest = 0.0;
  const auto pos = setup.layout.positions();
  for (std::size_t j = 0; j < seq.activations.size(); ++j) {
    double max_delay = 0.0;
    for (double x : pos) max_delay = std::max(max_delay, travel_time(std::abs(x - seq.actuator_positions[j]), params));
    latest = std::max(latest, seq.activations[j].onset + seq.activations[j].duration + max_delay);
  }
  return static_cast<std::size_t>(std::ceil((latest + tail) * setup.sample_rate)) + 1;
}

}  // namespace strokelab::propagation
