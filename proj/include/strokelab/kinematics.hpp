#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "strokelab/core_model.hpp"

namespace strokelab::kinematics {

struct Peak {
  double time = 0.0;   // s, window-center convention
  double value = 0.0;  // m/s^2 RMS
  std::size_t index = 0;
};

// Global maximum per channel, earliest on ties. Throws FlatChannel when a
// channel's maximum is 0.
std::vector<Peak> detect_peaks(const Envelope& env);
std::vector<double> peak_times(std::span<const Peak> peaks);

// Least-squares fit of peak time against position; velocity is the inverse
// slope. Throws ZeroTimeSpread when the slope is zero. Non-monotonic peak
// order is reported through StrokeKinematics::monotonic.
StrokeKinematics estimate_kinematics(std::span<const Peak> peaks, const ChannelLayout& layout);
StrokeKinematics estimate_kinematics(std::span<const double> peak_times, const ChannelLayout& layout);

// Longest contiguous run strictly above threshold_fraction * channel peak,
// in seconds (run length / envelope rate). Throws FlatChannel.
std::vector<double> stroke_duration_per_channel(const Envelope& env, double threshold_fraction = 0.1);

// Envelope -> peaks -> kinematics.
StrokeKinematics analyze(const Envelope& env, const ChannelLayout& layout);

}  // namespace strokelab::kinematics
