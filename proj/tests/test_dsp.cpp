#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "strokelab/dsp.hpp"
#include "strokelab/error.hpp"
#include "strokelab/fft.hpp"
#include "test_support.hpp"

using namespace strokelab;
using namespace strokelab::dsp;

namespace {

double rms(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no exception");
  return Errc::InvalidArgument;
}

// Smooth bump centered on c with half-width h, zero elsewhere.
double bump(double t, double c, double h) {
  const double u = (t - c) / h;
  return std::abs(u) >= 1.0 ? 0.0 : std::pow(std::cos(u * std::numbers::pi / 2), 2);
}

}  // namespace

TEST_CASE("detrend removes constants and ramps") {
  CHECK(testing::max_abs_diff(detrend(std::vector<double>(50, 7.5)), std::vector<double>(50, 0.0)) < 1e-12);
  std::vector<double> ramp(200);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 3.0 - 0.25 * static_cast<double>(i);
  CHECK(testing::max_abs_diff(detrend(ramp), std::vector<double>(200, 0.0)) < 1e-10);
  CHECK(code_of([] { detrend(std::vector<double>{1.0}); }) == Errc::TooShort);
}

TEST_CASE("detrend recovers a sinusoid riding on a ramp") {
  // A cosine centered on the middle sample over whole periods has zero mean
  // and is exactly orthogonal to the line, so detrending returns it intact.
  const double fs = 2000.0;
  const std::size_t n = 2001;
  const double mid = static_cast<double>(n - 1) / 2.0;
  for (double periods : {10.0, 13.0, 40.0}) {
    const double f = periods * fs / static_cast<double>(n);
    std::vector<double> s(n), x(n), err(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::cos(2.0 * std::numbers::pi * f * (static_cast<double>(i) - mid) / fs);
      x[i] = s[i] + 0.4 + 2.0 * static_cast<double>(i) / fs;
    }
    const auto d = detrend(x);
    for (std::size_t i = 0; i < n; ++i) err[i] = d[i] - s[i];
    CHECK(rms(err) < 1e-6);
  }
}

TEST_CASE("detrend output has zero mean and slope, and is idempotent") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(2 + trial * 11);
    for (auto& v : x) v = n(rng) + 5.0;
    const auto d = detrend(x);
    const double scale = rms(x);
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    double sxt = 0.0, sxx = 0.0;
    const double tm = (static_cast<double>(d.size()) - 1.0) / 2.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      sxt += (static_cast<double>(i) - tm) * d[i];
      sxx += (static_cast<double>(i) - tm) * (static_cast<double>(i) - tm);
    }
    CHECK(std::abs(mean) <= 1e-9 * scale);
    CHECK(std::abs(sxt / sxx) <= 1e-9 * scale);
    CHECK(testing::max_abs_diff(detrend(d), d) <= 1e-12 * std::max(1.0, rms(d)));
  }
}

TEST_CASE("axis magnitude combines detrended axes") {
  const auto a = testing::sine(400, 50.0, 2000.0, 1.0);
  auto data = testing::uniform_recording(a).data();
  for (auto& ch : data.channels) {
    ch[1].assign(a.size(), 0.0);
    ch[2].assign(a.size(), 0.0);
  }
  data.channels[1][1] = data.channels[1][0];
  data.channels[1][2] = data.channels[1][0];
  for (std::size_t i = 0; i < a.size(); ++i) {
    data.channels[2][0][i] = 3.0;
    data.channels[2][1][i] = 4.0;
  }
  const auto mag = axis_magnitude(Recording(data));
  const auto d = detrend(a);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(mag[0][i] == doctest::Approx(std::abs(d[i])).epsilon(1e-12));
    CHECK(mag[1][i] == doctest::Approx(std::abs(d[i]) * std::sqrt(3.0)).epsilon(1e-12));
    CHECK(mag[2][i] == doctest::Approx(0.0));
  }
}

TEST_CASE("rms envelope of a 125 Hz sine") {
  const auto x = testing::sine(4000, 125.0, 2000.0);
  const auto env = rms_envelope(x, 2000.0);
  CHECK(env.size() == 4000 - 400 + 1);
  for (double v : env) CHECK(v == doctest::Approx(std::sqrt(0.5)).epsilon(1e-3));
  const auto hopped = rms_envelope(x, 2000.0, 0.2, 7);
  CHECK(hopped.size() == (4000 - 400) / 7 + 1);
  for (double v : rms_envelope(std::vector<double>(500, 0.0), 2000.0)) CHECK(v == 0.0);
  CHECK(code_of([&] { rms_envelope(std::vector<double>(399, 1.0), 2000.0); }) == Errc::TooShort);
}

TEST_CASE("rms envelope matches a direct window sum and is homogeneous") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> x(1200);
  for (auto& v : x) v = n(rng);
  const auto env = rms_envelope(x, 2000.0, 0.05, 3);
  for (std::size_t k = 0; k < env.size(); ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < 100; ++i) s += x[k * 3 + i] * x[k * 3 + i];
    CHECK(env[k] == doctest::Approx(std::sqrt(s / 100.0)).epsilon(1e-12));
  }
  for (double alpha : {-3.5, 0.25, 1e3}) {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = alpha * x[i];
    const auto ey = rms_envelope(y, 2000.0, 0.05, 3);
    for (std::size_t k = 0; k < env.size(); ++k) CHECK(ey[k] == doctest::Approx(std::abs(alpha) * env[k]).epsilon(1e-13));
  }
}

TEST_CASE("bessel I0 agrees with the long-double series") {
  CHECK(bessel_i0(0.0) == 1.0);
  CHECK(bessel_i0(8.0) == doctest::Approx(427.564115721804785).epsilon(1e-11));
  CHECK(bessel_i0(1.0) == doctest::Approx(1.26606587775200834).epsilon(1e-11));
  CHECK(bessel_i0(20.0) == doctest::Approx(43558282.5595535333).epsilon(1e-11));
  for (double x = 0.0; x <= 30.0; x += 0.37) CHECK(bessel_i0(x) == doctest::Approx(testing::bessel_i0_reference(x)).epsilon(1e-11));
}

TEST_CASE("kaiser window shape") {
  const auto rect = kaiser_window(128, 0.0);
  for (double w : rect) CHECK(w == 1.0);
  const auto w = kaiser_window(128, 8.0);
  // 1 / I0(8) from the long-double series.
  CHECK(w[0] == doctest::Approx(2.33883051273332643e-3).epsilon(1e-11));
  CHECK(w[127] == w[0]);
  for (double beta : {0.5, 3.0, 8.0, 14.0}) {
    for (std::size_t n : {std::size_t{2}, std::size_t{9}, std::size_t{64}, std::size_t{128}}) {
      const auto k = kaiser_window(n, beta);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(k[i] == k[n - 1 - i]);
        CHECK(k[i] > 0.0);
        CHECK(k[i] <= 1.0);
      }
      CHECK(*std::max_element(k.begin(), k.end()) == k[(n - 1) / 2]);
    }
  }
  for (std::size_t i = 0; i < 128; ++i) {
    const double r = 2.0 * static_cast<double>(i) / 127.0 - 1.0;
    CHECK(w[i] == doctest::Approx(testing::bessel_i0_reference(8.0 * std::sqrt(1.0 - r * r)) /
                                  testing::bessel_i0_reference(8.0)).epsilon(1e-11));
  }
}

TEST_CASE("frame spec validation") {
  FrameSpec s;
  CHECK_NOTHROW(s.validate());
  s.n_fft = 100;
  CHECK_THROWS(s.validate());
  s = {};
  s.n_fft = 4;
  CHECK_THROWS(s.validate());
  s = {};
  s.hop = 0;
  CHECK_THROWS(s.validate());
  s = {};
  s.beta = -1.0;
  CHECK_THROWS(s.validate());
}

TEST_CASE("FFT agrees with a direct DFT") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t size : {8u, 16u, 128u, 256u}) {
    FftPlan plan(size);
    std::vector<double> a(size), b(size);
    for (auto& v : a) v = n(rng);
    for (auto& v : b) v = n(rng);
    const auto ra = testing::direct_dft(a);
    const auto rb = testing::direct_dft(b);
    std::vector<std::complex<double>> oa(size / 2 + 1), ob(size / 2 + 1);
    plan.forward_real_pair(a, b, oa, ob);
    double scale = 0.0;
    for (const auto& z : ra) scale = std::max(scale, std::abs(z));
    for (std::size_t k = 0; k <= size / 2; ++k) {
      CHECK(std::abs(oa[k] - ra[k]) <= 1e-9 * scale);
      CHECK(std::abs(ob[k] - rb[k]) <= 1e-9 * scale);
    }
    std::vector<std::complex<double>> full(a.begin(), a.end());
    plan.forward(full);
    for (std::size_t k = 0; k < size; ++k) CHECK(std::abs(full[k] - ra[k]) <= 1e-9 * scale);
  }
  CHECK_THROWS(FftPlan(100));
}

TEST_CASE("frame PSD matches the DFT oracle and satisfies Parseval") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  const double fs = 2000.0;
  const auto w = kaiser_window(128, 8.0);
  const double sw2 = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(128);
    for (auto& v : x) v = n(rng);
    const auto psd = frame_psd(x, w, fs);
    REQUIRE(psd.size() == 65);
    std::vector<double> xw(128);
    for (std::size_t i = 0; i < 128; ++i) xw[i] = x[i] * w[i];
    const auto oracle = testing::direct_dft(xw);
    double total = 0.0;
    for (std::size_t k = 0; k <= 64; ++k) {
      const double expect = std::norm(oracle[k]) / (fs * sw2) * ((k == 0 || k == 64) ? 1.0 : 2.0);
      CHECK(psd[k] == doctest::Approx(expect).epsilon(1e-9));
      CHECK(psd[k] >= 0.0);
      total += psd[k] * fs / 128.0;
    }
    const double ms = std::inner_product(xw.begin(), xw.end(), xw.begin(), 0.0) / 128.0;
    CHECK(std::abs(total - ms * 128.0 / sw2) <= 1e-9 * ms * 128.0 / sw2);
  }
}

TEST_CASE("spectrum frames of a 125 Hz sine peak at bin 8") {
  const auto x = testing::sine(1000, 125.0, 2000.0);
  const auto frames = power_spectrum_frames(x, 2000.0);
  CHECK(frames.n_bins == 33);
  CHECK(frames.n_frames == 1000 - 128 + 1);
  CHECK(frames.bin_freqs.back() == 500.0);
  CHECK(frames.bin_freqs[8] == 125.0);
  for (std::size_t f = 0; f < frames.n_frames; ++f) {
    const auto row = frames.frame(f);
    CHECK(std::max_element(row.begin(), row.end()) - row.begin() == 8);
  }
  const auto zero = power_spectrum_frames(std::vector<double>(200, 0.0), 2000.0);
  for (double v : zero.psd) CHECK(v == 0.0);
  CHECK(code_of([] { power_spectrum_frames(std::vector<double>(127, 0.0), 2000.0); }) == Errc::TooShort);
}

TEST_CASE("retained bins and frame counts") {
  CHECK(retained_bins(128, 2000.0) == 33);
  CHECK(retained_bins(128, 800.0) == 65);    // capped at N/2
  CHECK(retained_bins(256, 2000.0) == 65);
  CHECK(retained_bins(128, 3000.0) == 22);   // floor(500 / 23.4375) = 21
  CHECK(frame_count(4000, 128, 1) == 3873);
  CHECK(frame_count(4000, 128, 10) == 388);
}

TEST_CASE("aggregate spectra of identical channels has zero spread") {
  const auto x = testing::sine(600, 125.0, 2000.0);
  const Recording rec = testing::uniform_recording(x);
  const std::vector<Recording> recs{rec};
  const auto stats = aggregate_spectra(recs);
  CHECK(stats.member_count == 6);
  CHECK(stats.frame_count == 6 * (600 - 128 + 1));
  const double peak = *std::max_element(stats.mean.begin(), stats.mean.end());
  for (double s : stats.std) CHECK(s <= 1e-9 * peak);
  CHECK(std::max_element(stats.mean.begin(), stats.mean.end()) - stats.mean.begin() == 8);
  CHECK_NOTHROW(stats.validate());
}

TEST_CASE("aggregate spectra two-member statistics") {
  const auto x = testing::sine(300, 250.0, 2000.0);
  auto data = testing::uniform_recording(x).data();
  data.channels.resize(2);
  data.layout = ChannelLayout({0.0, 0.02});
  for (auto& axis : data.channels[1]) for (auto& v : axis) v *= 2.0;
  const std::vector<Recording> recs{Recording(data)};
  const auto stats = aggregate_spectra(recs);
  const auto p = channel_mean_spectrum(recs[0], 0);
  const auto q = channel_mean_spectrum(recs[0], 1);
  for (std::size_t k = 0; k < p.size(); ++k) {
    CHECK(stats.mean[k] == doctest::Approx((p[k] + q[k]) / 2).epsilon(1e-12));
    CHECK(stats.std[k] == doctest::Approx(std::abs(p[k] - q[k]) / 2).epsilon(1e-9).scale(p[k] + q[k]));
  }
}

TEST_CASE("aggregate spectra is permutation invariant and counts frames") {
  std::mt19937_64 rng(4);
  std::vector<Recording> recs;
  std::size_t expected = 0;
  for (int i = 0; i < 5; ++i) {
    const std::size_t n = 200 + 37 * i;
    recs.push_back(testing::random_recording(rng, n, 3));
    expected += 3 * frame_count(n, 128, 4);
  }
  FrameSpec spec;
  spec.hop = 4;
  const auto a = aggregate_spectra(recs, spec);
  CHECK(a.frame_count == expected);
  CHECK(a.member_count == 15);
  std::vector<Recording> shuffled{recs[3], recs[0], recs[4], recs[2], recs[1]};
  const auto b = aggregate_spectra(shuffled, spec);
  for (std::size_t k = 0; k < a.mean.size(); ++k) {
    CHECK(b.mean[k] == doctest::Approx(a.mean[k]).epsilon(1e-12));
    CHECK(b.std[k] == doctest::Approx(a.std[k]).epsilon(1e-9));
  }
}

TEST_CASE("aggregate spectra errors") {
  CHECK(code_of([] { aggregate_spectra(std::vector<Recording>{}); }) == Errc::EmptyInput);
  std::mt19937_64 rng(2);
  const std::vector<Recording> short_rec{testing::random_recording(rng, 100)};
  CHECK(code_of([&] { aggregate_spectra(short_rec); }) == Errc::TooShort);
  auto other = testing::random_recording(rng, 300).data();
  other.sample_rate = 1000.0;
  const std::vector<Recording> mixed{testing::random_recording(rng, 300), Recording(other)};
  CHECK(code_of([&] { aggregate_spectra(mixed); }) == Errc::InvalidArgument);
}

TEST_CASE("align envelopes: identity, shift and time scaling") {
  // Envelope rate chosen so sample k sits at time k/(M-1) once the half-window offset is removed.
  const std::size_t m = kAlignedPoints;
  Envelope env;
  env.window_len = 0.0;
  env.sample_rate = static_cast<double>(m - 1);
  env.per_channel.assign(3, std::vector<double>(m));
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t k = 0; k < m; ++k) env.per_channel[c][k] = bump(static_cast<double>(k) / (m - 1), 0.5 * c, 0.3);
  const std::vector<double> peaks{0.0, 0.5, 1.0};
  const auto same = align_envelopes(env, peaks);
  for (std::size_t c = 0; c < 3; ++c) CHECK(testing::max_abs_diff(same.per_channel[c], env.per_channel[c]) <= 1e-6);
  CHECK(same.stroke_time.front() == 0.0);
  CHECK(same.stroke_time.back() == 1.0);

  // Analytic stroke sampled at 1 kHz, once at nominal speed and once 2x slower and delayed.
  auto sampled = [](double scale, double shift) {
    Envelope e;
    e.sample_rate = 1000.0;
    e.window_len = 0.2;
    e.per_channel.assign(4, std::vector<double>(4000));
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t k = 0; k < 4000; ++k) {
        const double t = (e.time_of(k) - shift) / scale;
        e.per_channel[c][k] = bump(t, 0.5 + 0.2 * c, 0.3);
      }
    return e;
  };
  const auto base = sampled(1.0, 0.0);
  const std::vector<double> p0{0.5, 0.7, 0.9, 1.1};
  const auto a0 = align_envelopes(base, p0);
  const auto shifted = align_envelopes(sampled(1.0, 0.4), std::vector<double>{0.9, 1.1, 1.3, 1.5});
  const auto slower = align_envelopes(sampled(2.0, 0.0), std::vector<double>{1.0, 1.4, 1.8, 2.2});
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(testing::max_abs_diff(a0.per_channel[c], shifted.per_channel[c]) <= 1e-6);
    // Linear interpolation error of a cos^2 bump with 1 ms samples is below 1e-4.
    CHECK(testing::max_abs_diff(a0.per_channel[c], slower.per_channel[c]) <= 1e-4);
  }
}

TEST_CASE("align envelopes rejects non-monotonic peaks") {
  Envelope env{1000.0, 0.2, 1, std::vector<std::vector<double>>(3, std::vector<double>(100, 1.0))};
  CHECK(code_of([&] { align_envelopes(env, std::vector<double>{0.1, 0.3, 0.2}); }) == Errc::NonMonotonicPeaks);
  CHECK(code_of([&] { align_envelopes(env, std::vector<double>{0.1, 0.1, 0.2}); }) == Errc::NonMonotonicPeaks);
  CHECK_NOTHROW(align_envelopes(env, std::vector<double>{0.3, 0.2, 0.1}));
}

TEST_CASE("envelope_of uses the detrended magnitude of each channel") {
  const auto x = testing::sine(1000, 125.0, 2000.0, 2.0);
  const auto env = envelope_of(testing::uniform_recording(x), 0.2, 5);
  CHECK(env.channel_count() == 6);
  CHECK(env.hop == 5);
  CHECK(env.sample_rate == 400.0);
  CHECK(env.length() == (1000 - 400) / 5 + 1);
  // Three equal axes: |a| * sqrt(3), RMS 2/sqrt(2)*sqrt(3).
  for (double v : env.per_channel[2]) CHECK(v == doctest::Approx(std::sqrt(6.0)).epsilon(2e-3));
}
