#include "strokelab/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "parallel.hpp"
#include "strokelab/error.hpp"
#include "strokelab/fft.hpp"

namespace strokelab::dsp {

void FrameSpec::validate() const {
  if (!is_power_of_two(n_fft) || n_fft < 8) throw Error(Errc::InvalidArgument, "n_fft must be a power of two >= 8");
  if (hop < 1) throw Error(Errc::InvalidArgument, "hop must be >= 1");
  if (!(beta >= 0.0)) throw Error(Errc::InvalidArgument, "Kaiser beta must be >= 0");
}

std::vector<double> detrend(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 2) throw Error(Errc::TooShort, "detrend needs at least 2 samples");
  const double center = 0.5 * static_cast<double>(n - 1);
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i) - center;
    sxy += dt * (series[i] - mean);
    sxx += dt * dt;
  }
  const double slope = sxy / sxx;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = series[i] - mean - slope * (static_cast<double>(i) - center);
  }
  return out;
}

std::vector<std::vector<double>> axis_magnitude(const Recording& rec) {
  std::vector<std::vector<double>> out(rec.channel_count());
  for (std::size_t c = 0; c < rec.channel_count(); ++c) {
    std::vector<double> sum_sq(rec.sample_count(), 0.0);
    for (std::size_t a = 0; a < kAxes; ++a) {
      const auto d = detrend(rec.channel(c)[a]);
      for (std::size_t k = 0; k < d.size(); ++k) sum_sq[k] += d[k] * d[k];
    }
    for (double& v : sum_sq) v = std::sqrt(v);
    out[c] = std::move(sum_sq);
  }
  return out;
}

std::size_t window_samples(double window_len, double sample_rate) {
  const double w = std::round(window_len * sample_rate);
  if (!(w >= 1.0)) throw Error(Errc::InvalidArgument, "envelope window must span at least one sample");
  return static_cast<std::size_t>(w);
}

std::vector<double> rms_envelope(std::span<const double> series, double sample_rate, double window_len,
                                 std::size_t hop) {
  if (hop < 1) throw Error(Errc::InvalidArgument, "hop must be >= 1");
  const std::size_t w = window_samples(window_len, sample_rate);
  if (series.size() < w) {
    throw Error(Errc::TooShort, "series of " + std::to_string(series.size()) +
                                    " samples is shorter than the " + std::to_string(w) + "-sample window");
  }
  const std::size_t count = (series.size() - w) / hop + 1;
  std::vector<double> out(count);
  // Direct summation per window keeps silent stretches exactly zero.
  for (std::size_t k = 0; k < count; ++k) {
    const double* p = series.data() + k * hop;
    double acc = 0.0;
    for (std::size_t i = 0; i < w; ++i) acc += p[i] * p[i];
    out[k] = std::sqrt(acc / static_cast<double>(w));
  }
  return out;
}

Envelope envelope_of(const Recording& rec, double window_len, std::size_t hop) {
  Envelope env;
  env.sample_rate = rec.sample_rate() / static_cast<double>(hop);
  env.window_len = window_len;
  env.hop = hop;
  const auto magnitude = axis_magnitude(rec);
  env.per_channel.resize(magnitude.size());
  detail::parallel_for(magnitude.size(), [&](std::size_t c) {
    env.per_channel[c] = rms_envelope(magnitude[c], rec.sample_rate(), window_len, hop);
  });
  return env;
}

double bessel_i0(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 1000; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k));
    sum += term;
    if (term < 1e-12 * sum) break;
  }
  return sum;
}

std::vector<double> kaiser_window(std::size_t n, double beta) {
  if (n < 2) throw Error(Errc::InvalidArgument, "window length must be >= 2");
  std::vector<double> w(n);
  const double denom = bessel_i0(beta);
  const double span = static_cast<double>(n - 1);
  // Evaluate the first half and mirror so w[n] == w[N-1-n] bit for bit.
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    const double r = 2.0 * static_cast<double>(i) / span - 1.0;
    const double v = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / denom;
    w[i] = v;
    w[n - 1 - i] = v;
  }
  return w;
}

std::vector<double> make_window(const FrameSpec& spec) {
  spec.validate();
  switch (spec.window) {
    case WindowKind::Kaiser:
      return kaiser_window(spec.n_fft, spec.beta);
    case WindowKind::Rectangular:
      return std::vector<double>(spec.n_fft, 1.0);
    case WindowKind::Hann: {
      std::vector<double> w(spec.n_fft);
      const double span = static_cast<double>(spec.n_fft - 1);
      for (std::size_t i = 0; i < spec.n_fft; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / span);
      }
      return w;
    }
  }
  return {};
}

namespace {

double window_energy(std::span<const double> window) {
  double e = 0.0;
  for (double v : window) e += v * v;
  return e;
}

// Per-bin factor turning |X[k]|^2 into one-sided PSD.
std::vector<double> psd_scale(std::size_t n, std::size_t bins, double sample_rate, double energy) {
  std::vector<double> scale(bins);
  const double base = 1.0 / (sample_rate * energy);
  for (std::size_t k = 0; k < bins; ++k) scale[k] = (k == 0 || 2 * k == n) ? base : 2.0 * base;
  return scale;
}

// Visits the retained-bin PSD of every frame of series, in frame order.
template <class Visit>
void for_each_frame_psd(std::span<const double> series, double sample_rate, const FrameSpec& spec,
                        std::span<const double> window, std::size_t bins, Visit&& visit) {
  const std::size_t n = spec.n_fft;
  const std::size_t frames = frame_count(series.size(), n, spec.hop);
  const FftPlan plan(n);
  const auto scale = psd_scale(n, bins, sample_rate, window_energy(window));
  std::vector<double> a(n), b(n), psd(bins);
  std::vector<std::complex<double>> xa(n / 2 + 1), xb(n / 2 + 1);

  auto load = [&](std::vector<double>& dst, std::size_t frame) {
    const double* p = series.data() + frame * spec.hop;
    for (std::size_t i = 0; i < n; ++i) dst[i] = p[i] * window[i];
  };
  auto emit = [&](const std::vector<std::complex<double>>& x, std::size_t frame) {
    for (std::size_t k = 0; k < bins; ++k) psd[k] = std::norm(x[k]) * scale[k];
    visit(frame, std::span<const double>(psd));
  };

  std::size_t f = 0;
  for (; f + 1 < frames; f += 2) {
    load(a, f);
    load(b, f + 1);
    plan.forward_real_pair(a, b, xa, xb);
    emit(xa, f);
    emit(xb, f + 1);
  }
  if (f < frames) {
    load(a, f);
    plan.forward_real(a, xa);
    emit(xa, f);
  }
}

}  // namespace

std::vector<double> frame_psd(std::span<const double> frame, std::span<const double> window, double sample_rate) {
  const std::size_t n = frame.size();
  if (window.size() != n) throw Error(Errc::InvalidArgument, "frame and window lengths differ");
  const FftPlan plan(n);
  std::vector<double> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = frame[i] * window[i];
  std::vector<std::complex<double>> x(n / 2 + 1);
  plan.forward_real(buf, x);
  const auto scale = psd_scale(n, n / 2 + 1, sample_rate, window_energy(window));
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::norm(x[k]) * scale[k];
  return out;
}

std::size_t retained_bins(std::size_t n_fft, double sample_rate) {
  const double bin_width = sample_rate / static_cast<double>(n_fft);
  const auto top = static_cast<std::size_t>(std::floor(kMaxAnalysisHz / bin_width + 1e-9));
  return std::min(top, n_fft / 2) + 1;
}

std::size_t frame_count(std::size_t length, std::size_t n_fft, std::size_t hop) {
  return length < n_fft ? 0 : (length - n_fft) / hop + 1;
}

std::vector<double> bin_frequencies(std::size_t n_fft, double sample_rate) {
  std::vector<double> f(retained_bins(n_fft, sample_rate));
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
  return f;
}

PsdFrames power_spectrum_frames(std::span<const double> series, double sample_rate, const FrameSpec& spec) {
  spec.validate();
  if (series.size() < spec.n_fft) {
    throw Error(Errc::TooShort, "series shorter than one " + std::to_string(spec.n_fft) + "-sample frame");
  }
  PsdFrames out;
  out.bin_freqs = bin_frequencies(spec.n_fft, sample_rate);
  out.n_bins = out.bin_freqs.size();
  out.n_frames = frame_count(series.size(), spec.n_fft, spec.hop);
  out.psd.resize(out.n_frames * out.n_bins);
  const auto window = make_window(spec);
  for_each_frame_psd(series, sample_rate, spec, window, out.n_bins,
                     [&](std::size_t f, std::span<const double> psd) {
                       std::copy(psd.begin(), psd.end(), out.psd.begin() + static_cast<std::ptrdiff_t>(f * out.n_bins));
                     });
  return out;
}

std::vector<double> channel_mean_spectrum(const Recording& rec, std::size_t channel, const FrameSpec& spec) {
  spec.validate();
  if (rec.sample_count() < spec.n_fft) {
    throw Error(Errc::TooShort, "recording shorter than one " + std::to_string(spec.n_fft) + "-sample frame");
  }
  const auto window = make_window(spec);
  const std::size_t bins = retained_bins(spec.n_fft, rec.sample_rate());
  const std::size_t frames = frame_count(rec.sample_count(), spec.n_fft, spec.hop);
  std::vector<double> acc(bins, 0.0);
  for (std::size_t a = 0; a < kAxes; ++a) {
    const auto d = detrend(rec.channel(channel)[a]);
    for_each_frame_psd(d, rec.sample_rate(), spec, window, bins, [&](std::size_t, std::span<const double> psd) {
      for (std::size_t k = 0; k < bins; ++k) acc[k] += psd[k];
    });
  }
  for (double& v : acc) v /= static_cast<double>(frames);
  return acc;
}

SpectrumStats aggregate_spectra(std::span<const Recording> recordings, const FrameSpec& spec) {
  spec.validate();
  if (recordings.empty()) throw Error(Errc::EmptyInput, "no recordings to aggregate");
  const double fs = recordings.front().sample_rate();
  struct Member {
    std::size_t rec;
    std::size_t channel;
  };
  std::vector<Member> members;
  SpectrumStats stats;
  for (std::size_t r = 0; r < recordings.size(); ++r) {
    const auto& rec = recordings[r];
    if (rec.sample_rate() != fs) throw Error(Errc::InvalidArgument, "recordings have different sample rates");
    if (rec.sample_count() < spec.n_fft) {
      throw Error(Errc::TooShort, "recording " + std::to_string(r) + " is shorter than one frame");
    }
    stats.frame_count += rec.channel_count() * frame_count(rec.sample_count(), spec.n_fft, spec.hop);
    for (std::size_t c = 0; c < rec.channel_count(); ++c) members.push_back({r, c});
  }

  std::vector<std::vector<double>> spectra(members.size());
  detail::parallel_for(members.size(), [&](std::size_t i) {
    spectra[i] = channel_mean_spectrum(recordings[members[i].rec], members[i].channel, spec);
  });

  const std::size_t bins = spectra.front().size();
  const double m = static_cast<double>(members.size());
  stats.bin_freqs = bin_frequencies(spec.n_fft, fs);
  stats.mean.assign(bins, 0.0);
  stats.std.assign(bins, 0.0);
  stats.member_count = members.size();
  for (const auto& s : spectra) {
    for (std::size_t k = 0; k < bins; ++k) stats.mean[k] += s[k];
  }
  for (double& v : stats.mean) v /= m;
  for (const auto& s : spectra) {
    for (std::size_t k = 0; k < bins; ++k) {
      const double d = s[k] - stats.mean[k];
      stats.std[k] += d * d;
    }
  }
  for (double& v : stats.std) v = std::sqrt(v / m);
  return stats;
}

AlignedEnvelope align_envelopes(const Envelope& env, std::span<const double> peak_times, std::size_t points) {
  if (peak_times.size() != env.channel_count() || peak_times.size() < 2) {
    throw Error(Errc::InvalidArgument, "need one peak time per channel and at least two channels");
  }
  if (points < 2) throw Error(Errc::InvalidArgument, "aligned grid needs at least two points");
  if (env.length() == 0) throw Error(Errc::InvalidArgument, "envelope is empty");
  const bool rising = peak_times[1] > peak_times[0];
  for (std::size_t i = 1; i < peak_times.size(); ++i) {
    const bool ok = rising ? peak_times[i] > peak_times[i - 1] : peak_times[i] < peak_times[i - 1];
    if (!ok) throw Error(Errc::NonMonotonicPeaks, "peak times are not strictly monotonic across channels");
  }

  const double t0 = peak_times.front();
  const double span = peak_times.back() - t0;
  AlignedEnvelope out;
  out.stroke_time.resize(points);
  for (std::size_t m = 0; m < points; ++m) out.stroke_time[m] = static_cast<double>(m) / static_cast<double>(points - 1);

  const double last = static_cast<double>(env.length() - 1);
  out.per_channel.resize(env.channel_count());
  for (std::size_t c = 0; c < env.channel_count(); ++c) {
    const auto& src = env.per_channel[c];
    auto& dst = out.per_channel[c];
    dst.resize(points);
    for (std::size_t m = 0; m < points; ++m) {
      const double t = t0 + out.stroke_time[m] * span;
      const double pos = std::clamp((t - env.window_len / 2.0) * env.sample_rate, 0.0, last);
      const auto i = static_cast<std::size_t>(pos);
      const double frac = pos - static_cast<double>(i);
      dst[m] = i + 1 < src.size() ? src[i] + frac * (src[i + 1] - src[i]) : src[i];
    }
  }
  return out;
}

}  // namespace strokelab::dsp
