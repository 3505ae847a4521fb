#pragma once

// Forward model of vibration transmission along the skin.
//
// A point source at x_s emitting s(t) is observed by a sensor at x_i as
//
//   a_i(t) = s(t - d / c) * exp(-d / lambda) + noise,   d = |x_i - x_s|
//
// with lambda the attenuation length and c the surface wave speed (either may
// be +inf). The scalar response is spread over the three sensor axes by a
// fixed unit vector.

#include <array>
#include <cstddef>
#include <cstdint>

#include "strokelab/core_model.hpp"

namespace strokelab::propagation {

// Normalized (0.26, 0.53, 0.80).
std::array<double, kAxes> default_axes_split();

struct SensorSetup {
  ChannelLayout layout = ChannelLayout::default_layout();
  double sample_rate = kDefaultSampleRate;
  std::array<double, kAxes> axes_split = default_axes_split();

  void validate() const;
};

// Finger stroke idealized as a moving point source with a raised-cosine
// contact envelope over the traversal of [start_pos, end_pos].
struct StrokeModel {
  double velocity = 0.1;       // m/s, sign matches end_pos - start_pos
  double start_pos = -0.10;    // m
  double end_pos = 0.20;       // m
  double ramp_fraction = 0.1;  // contact envelope ramp length / contact duration
  CarrierSpec carrier = default_caress_carrier();
  std::uint64_t seed = 0;
  double pre_roll = 0.3;   // s of silence before contact
  double post_roll = 0.3;  // s after contact ends

  void validate() const;
  double contact_duration() const;
  static CarrierSpec default_caress_carrier();
};

// Trapezoid with raised-cosine ramps of ramp_fraction * duration; zero outside
// [0, duration].
double raised_cosine_envelope(double tau, double duration, double ramp_fraction);

double spatial_gain(double distance, const PropagationParams& params);
double travel_time(double distance, const PropagationParams& params);

// Throws BandLimit if any carrier frequency exceeds sample_rate / 2.
Recording simulate_stroke(const StrokeModel& model, const PropagationParams& params,
                          const SensorSetup& setup = {});

// Superposition of every actuator's emission at every sensor. Throws
// BandLimit for carrier frequencies above 500 Hz or sample_rate / 2.
Recording render_sequence(const ActuationSequence& seq, const PropagationParams& params,
                          const SensorSetup& setup, std::size_t n_samples, std::uint64_t seed = 0);

// Samples needed to hold every activation as seen by the farthest sensor,
// plus tail seconds.
std::size_t render_length(const ActuationSequence& seq, const PropagationParams& params,
                          const SensorSetup& setup, double tail = 0.3);

}  // namespace strokelab::propagation
