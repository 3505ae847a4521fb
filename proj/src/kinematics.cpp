#include "strokelab/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "strokelab/error.hpp"

namespace strokelab::kinematics {

std::vector<Peak> detect_peaks(const Envelope& env) {
  std::vector<Peak> peaks;
  peaks.reserve(env.channel_count());
  for (std::size_t c = 0; c < env.channel_count(); ++c) {
    const auto& ch = env.per_channel[c];
    if (ch.empty()) throw Error(Errc::InvalidArgument, "channel " + std::to_string(c) + " envelope is empty");
    // max_element returns the first of equal maxima
    const auto it = std::max_element(ch.begin(), ch.end());
    if (!(*it > 0.0)) throw Error(Errc::FlatChannel, "channel " + std::to_string(c) + " has no signal");
    const auto k = static_cast<std::size_t>(it - ch.begin());
    peaks.push_back({env.time_of(k), *it, k});
  }
  return peaks;
}

std::vector<double> peak_times(std::span<const Peak> peaks) {
  std::vector<double> out;
  out.reserve(peaks.size());
  for (const auto& p : peaks) out.push_back(p.time);
  return out;
}

StrokeKinematics estimate_kinematics(std::span<const double> times, const ChannelLayout& layout) {
  const std::size_t n = times.size();
  if (n < 2 || n != layout.size()) {
    throw Error(Errc::InvalidArgument, "need one peak per layout channel and at least two channels");
  }
  const auto pos = layout.positions();
  double mx = 0.0, mt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += pos[i];
    mt += times[i];
  }
  mx /= static_cast<double>(n);
  mt /= static_cast<double>(n);
  double sxx = 0.0, sxt = 0.0, stt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = pos[i] - mx;
    const double dt = times[i] - mt;
    sxx += dx * dx;
    sxt += dx * dt;
    stt += dt * dt;
  }
  const double slope = sxt / sxx;  // s per m
  if (slope == 0.0 || stt == 0.0) throw Error(Errc::ZeroTimeSpread, "peak times do not vary with position");

  StrokeKinematics k;
  k.peak_times.assign(times.begin(), times.end());
  k.velocity = 1.0 / slope;
  k.r_squared = std::clamp(sxt * sxt / (sxx * stt), 0.0, 1.0);
  k.duration = std::abs(times[n - 1] - times[0]);

  std::vector<double> segment(n - 1);
  bool finite = true;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double dt = times[i + 1] - times[i];
    if ((dt > 0.0) != (k.velocity > 0.0) || dt == 0.0) k.monotonic = false;
    if (dt == 0.0) {
      finite = false;
      continue;
    }
    segment[i] = (pos[i + 1] - pos[i]) / dt;
  }
  if (!finite) {
    k.uniformity = std::numeric_limits<double>::infinity();
  } else {
    double mean = 0.0;
    for (double v : segment) mean += v;
    mean /= static_cast<double>(segment.size());
    double var = 0.0;
    for (double v : segment) var += (v - mean) * (v - mean);
    var /= static_cast<double>(segment.size());
    k.uniformity = std::sqrt(var) / std::abs(mean);
  }
  return k;
}

StrokeKinematics estimate_kinematics(std::span<const Peak> peaks, const ChannelLayout& layout) {
  const auto times = peak_times(peaks);
  return estimate_kinematics(std::span<const double>(times), layout);
}

std::vector<double> stroke_duration_per_channel(const Envelope& env, double threshold_fraction) {
  if (!(threshold_fraction >= 0.0 && threshold_fraction < 1.0)) {
    throw Error(Errc::InvalidArgument, "threshold fraction must lie in [0, 1)");
  }
  std::vector<double> out;
  for (std::size_t c = 0; c < env.channel_count(); ++c) {
    const auto& ch = env.per_channel[c];
    const double peak = ch.empty() ? 0.0 : *std::max_element(ch.begin(), ch.end());
    if (!(peak > 0.0)) throw Error(Errc::FlatChannel, "channel " + std::to_string(c) + " has no signal");
    const double threshold = threshold_fraction * peak;
    std::size_t best = 0, run = 0;
    for (double v : ch) {
      run = v > threshold ? run + 1 : 0;
      best = std::max(best, run);
    }
    out.push_back(static_cast<double>(best) / env.sample_rate);
  }
  return out;
}

StrokeKinematics analyze(const Envelope& env, const ChannelLayout& layout) {
  const auto peaks = detect_peaks(env);
  return estimate_kinematics(std::span<const Peak>(peaks), layout);
}

}  // namespace strokelab::kinematics
