#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "strokelab/core_model.hpp"

namespace strokelab::dsp {

inline constexpr double kDefaultEnvelopeWindow = 0.200;  // s
inline constexpr double kMaxAnalysisHz = 500.0;
inline constexpr std::size_t kAlignedPoints = 256;

enum class WindowKind { Kaiser, Rectangular, Hann };

struct FrameSpec {
  std::size_t n_fft = 128;
  WindowKind window = WindowKind::Kaiser;
  double beta = 8.0;  // Kaiser shape
  std::size_t hop = 1;

  // Throws Error(InvalidArgument): n_fft power of two >= 8, hop >= 1, beta >= 0.
  void validate() const;
};

// Removes the least-squares line. Throws TooShort below 2 samples.
std::vector<double> detrend(std::span<const double> series);

// Per channel: detrend each axis, then the sample-wise Euclidean norm.
std::vector<std::vector<double>> axis_magnitude(const Recording& rec);

std::size_t window_samples(double window_len, double sample_rate);

// Sliding RMS; output[k] covers samples [k*hop, k*hop + W). Length is
// floor((L - W) / hop) + 1. Throws TooShort if L < W.
std::vector<double> rms_envelope(std::span<const double> series, double sample_rate,
                                 double window_len = kDefaultEnvelopeWindow, std::size_t hop = 1);

// axis_magnitude followed by rms_envelope on every channel.
Envelope envelope_of(const Recording& rec, double window_len = kDefaultEnvelopeWindow,
                     std::size_t hop = 1);

// Modified Bessel function of the first kind, order 0, by power series.
double bessel_i0(double x);

std::vector<double> kaiser_window(std::size_t n, double beta);
std::vector<double> make_window(const FrameSpec& spec);

// Full one-sided PSD (N/2 + 1 bins) of a single frame:
// |X[k]|^2 / (fs * sum w^2), doubled for 0 < k < N/2.
std::vector<double> frame_psd(std::span<const double> frame, std::span<const double> window,
                              double sample_rate);

// Bins k = 0 .. floor(500 / (fs / N)), capped at N/2.
std::size_t retained_bins(std::size_t n_fft, double sample_rate);
std::size_t frame_count(std::size_t length, std::size_t n_fft, std::size_t hop);
std::vector<double> bin_frequencies(std::size_t n_fft, double sample_rate);

struct PsdFrames {
  std::vector<double> bin_freqs;
  std::size_t n_frames = 0;
  std::size_t n_bins = 0;
  std::vector<double> psd;  // row-major [frame][bin]

  std::span<const double> frame(std::size_t i) const { return {psd.data() + i * n_bins, n_bins}; }
};

// Frames start at 0, hop, 2*hop, ...; no detrending is applied here.
// Throws TooShort if the series is shorter than n_fft.
PsdFrames power_spectrum_frames(std::span<const double> series, double sample_rate,
                                const FrameSpec& spec = {});

// Mean over frames of the axis-summed PSD for one channel. Each axis is
// detrended over the whole recording before framing.
std::vector<double> channel_mean_spectrum(const Recording& rec, std::size_t channel,
                                          const FrameSpec& spec = {});

// Population statistics across channel spectra. Every channel of every
// recording contributes one member: its frame-averaged, axis-summed PSD.
// frame_count totals the channel-frames behind those members.
// Throws EmptyInput, TooShort, InvalidArgument (mixed sample rates).
SpectrumStats aggregate_spectra(std::span<const Recording> recordings, const FrameSpec& spec = {});

struct AlignedEnvelope {
  std::vector<double> stroke_time;  // uniform grid on [0, 1]
  std::vector<std::vector<double>> per_channel;
};

// Resamples each channel onto stroke time u, where t(u) maps the first
// channel's peak to u = 0 and the last channel's peak to u = 1. Values outside
// the envelope's support hold the nearest end sample.
// Throws NonMonotonicPeaks unless peak_times are strictly monotonic.
AlignedEnvelope align_envelopes(const Envelope& env, std::span<const double> peak_times,
                                std::size_t points = kAlignedPoints);

}  // namespace strokelab::dsp
