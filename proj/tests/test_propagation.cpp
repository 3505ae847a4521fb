#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "strokelab/dsp.hpp"
#include "strokelab/error.hpp"
#include "strokelab/kinematics.hpp"
#include "strokelab/propagation.hpp"
#include "test_support.hpp"

using namespace strokelab;
using namespace strokelab::propagation;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

PropagationParams transparent() {
  PropagationParams p;
  p.attenuation_length = kInf;
  p.wave_speed = kInf;
  return p;
}

ActuationSequence single_actuator(double position, double onset, double duration, double amp, CarrierSpec carrier) {
  ActuationSequence seq;
  seq.actuator_positions = {position};
  seq.activations = {Activation{onset, duration, amp, 0.25}};
  seq.carrier = std::move(carrier);
  return seq;
}

double peak_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

TEST_CASE("raised-cosine envelope shape") {
  CHECK(raised_cosine_envelope(-0.01, 1.0, 0.25) == 0.0);
  CHECK(raised_cosine_envelope(1.01, 1.0, 0.25) == 0.0);
  CHECK(raised_cosine_envelope(0.5, 1.0, 0.25) == 1.0);
  CHECK(raised_cosine_envelope(0.125, 1.0, 0.25) == doctest::Approx(0.5));
  CHECK(raised_cosine_envelope(0.875, 1.0, 0.25) == doctest::Approx(0.5));
  CHECK(raised_cosine_envelope(0.3, 1.0, 0.0) == 1.0);
  for (double t = 0.0; t <= 1.0; t += 0.01)
    CHECK(raised_cosine_envelope(t, 1.0, 0.5) == doctest::Approx(0.5 * (1 - std::cos(2 * std::numbers::pi * t))).scale(1.0));
}

TEST_CASE("gain and delay") {
  const PropagationParams p;
  CHECK(spatial_gain(0.02, p) == doctest::Approx(std::exp(-1.0)));
  CHECK(travel_time(0.05, p) == doctest::Approx(0.01));
  CHECK(spatial_gain(1.0, transparent()) == 1.0);
  CHECK(travel_time(1.0, transparent()) == 0.0);
}

TEST_CASE("transparent skin makes every channel identical") {
  StrokeModel model;
  model.carrier = {{{125.0, 1.0}, {60.0, 0.3}}};
  const auto rec = simulate_stroke(model, transparent());
  for (std::size_t c = 1; c < rec.channel_count(); ++c)
    for (std::size_t a = 0; a < kAxes; ++a) CHECK(rec.channel(c)[a] == rec.channel(0)[a]);
  CHECK(peak_abs(rec.channel(0)[2]) > 0.1);
}

TEST_CASE("a co-located actuator is reproduced exactly and decays by e per length") {
  const auto layout = ChannelLayout::default_layout();
  const SensorSetup setup;
  PropagationParams p;
  p.wave_speed = kInf;
  const auto seq = single_actuator(layout.position(2), 0.05, 0.2, 2.0, {{{100.0, 1.0}}});
  const auto rec = render_sequence(seq, p, setup, 800);
  const auto split = default_axes_split();
  for (std::size_t k = 0; k < 800; ++k) {
    const double t = static_cast<double>(k) / 2000.0;
    const double s = 2.0 * raised_cosine_envelope(t - 0.05, 0.2, 0.25) * std::sin(2 * std::numbers::pi * 100.0 * t);
    for (std::size_t a = 0; a < kAxes; ++a) {
      CHECK(rec.channel(2)[a][k] == doctest::Approx(s * split[a]).scale(1.0).epsilon(1e-12));
      CHECK(rec.channel(3)[a][k] == doctest::Approx(rec.channel(2)[a][k] * std::exp(-1.0)).scale(1.0).epsilon(1e-12));
    }
  }
  const auto far = render_sequence(seq, transparent(), setup, 800);
  CHECK(far.channel(5)[0] == far.channel(2)[0]);
}

TEST_CASE("axes split is a unit vector") {
  const auto s = default_axes_split();
  CHECK(s[0] * s[0] + s[1] * s[1] + s[2] * s[2] == doctest::Approx(1.0));
  CHECK(s[1] / s[0] == doctest::Approx(0.53 / 0.26));
}

TEST_CASE("rendering is linear, equivariant and deterministic") {
  const auto layout = ChannelLayout::default_layout();
  const SensorSetup setup;
  const auto seq = ActuationSequence::uniform(layout, 0.1, 0.06, 0.15, 1.0, {{{125.0, 1.0}, {250.0, 0.5}}});
  const PropagationParams p;
  const auto a = render_sequence(seq, p, setup, 3000);
  const auto b = render_sequence(seq.scaled(2.5), p, setup, 3000);
  for (std::size_t c = 0; c < 6; ++c)
    for (std::size_t k = 0; k < 3000; k += 7) CHECK(b.channel(c)[1][k] == doctest::Approx(2.5 * a.channel(c)[1][k]).scale(1.0));

  // Shift by a whole number of samples and a whole number of carrier periods.
  auto shifted = seq;
  for (auto& act : shifted.activations) act.onset += 0.04;
  const auto s = render_sequence(shifted, p, setup, 3000);
  for (std::size_t c = 0; c < 6; ++c)
    for (std::size_t k = 0; k + 80 < 3000; k += 5) CHECK(s.channel(c)[0][k + 80] == doctest::Approx(a.channel(c)[0][k]).scale(1.0));

  CHECK(render_sequence(seq, p, setup, 3000) == a);
  auto zero = seq;
  for (auto& act : zero.activations) act.peak_amplitude = 0.0;
  const auto z = render_sequence(zero, p, setup, 500);
  for (std::size_t c = 0; c < 6; ++c)
    for (std::size_t ax = 0; ax < kAxes; ++ax) CHECK(peak_abs(z.channel(c)[ax]) == 0.0);
}

TEST_CASE("noise is seeded and reproducible") {
  StrokeModel model;
  PropagationParams p;
  p.noise_sigma = 0.3;
  model.seed = 42;
  const auto a = simulate_stroke(model, p);
  const auto b = simulate_stroke(model, p);
  CHECK(a == b);
  model.seed = 43;
  CHECK_FALSE(simulate_stroke(model, p) == a);
}

TEST_CASE("band limits are enforced") {
  StrokeModel model;
  model.carrier = {{{400.0, 1.0}}};
  SensorSetup slow;
  slow.sample_rate = 500.0;
  try {
    simulate_stroke(model, {}, slow);
    FAIL("expected BandLimit");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BandLimit);
  }
  auto seq = single_actuator(0.0, 0.0, 0.1, 1.0, {{{600.0, 1.0}}});
  try {
    render_sequence(seq, {}, {}, 100);
    FAIL("expected BandLimit");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BandLimit);
  }
}

TEST_CASE("stroke model validation") {
  StrokeModel m;
  CHECK_NOTHROW(m.validate());
  m.velocity = -0.1;
  CHECK_THROWS(m.validate());
  m = {};
  m.end_pos = m.start_pos;
  CHECK_THROWS(m.validate());
  m = {};
  CHECK(m.contact_duration() == doctest::Approx(3.0));
}

TEST_CASE("a 0.2 m/s stroke peaks once per channel at 0.1 s spacing") {
  // A single tone keeps carrier beats out of the 200 ms RMS windows.
  StrokeModel model;
  model.velocity = 0.2;
  model.carrier = {{{125.0, 1.0}}};
  const auto rec = simulate_stroke(model, {});
  const auto env = dsp::envelope_of(rec);
  const auto peaks = kinematics::detect_peaks(env);
  for (std::size_t i = 1; i < peaks.size(); ++i) {
    CHECK(peaks[i].time > peaks[i - 1].time);
    CHECK(std::abs(peaks[i].time - peaks[i - 1].time - 0.1) <= 1.0 / env.sample_rate + 1e-9);
  }
}

TEST_CASE("mirrored geometry reverses the estimated direction") {
  const auto layout = ChannelLayout::default_layout();
  const auto fwd = ActuationSequence::uniform(layout, 0.1, 0.1, 0.2, 1.0, {{{150.0, 1.0}}});
  const auto rev = ActuationSequence::uniform(layout, 0.1, -0.1, 0.2, 1.0, {{{150.0, 1.0}}});
  const SensorSetup setup;
  const PropagationParams p;
  const auto kf = kinematics::analyze(dsp::envelope_of(render_sequence(fwd, p, setup, 3000), 0.2, 4), layout);
  const auto kr = kinematics::analyze(dsp::envelope_of(render_sequence(rev, p, setup, 3000), 0.2, 4), layout);
  CHECK(kf.velocity > 0.0);
  CHECK(kr.velocity < 0.0);
  CHECK(std::abs(kf.velocity) == doctest::Approx(std::abs(kr.velocity)).epsilon(0.02));
}

TEST_CASE("render length covers the latest activation") {
  const auto seq = ActuationSequence::uniform(ChannelLayout::default_layout(), 0.1, 0.1, 0.2, 1.0, {{{150.0, 1.0}}});
  const auto n = render_length(seq, {}, {}, 0.3);
  // Last offset 0.6 + 0.2 duration, + 0.1 m / 5 m/s travel, + 0.3 tail.
  CHECK(n >= 2241);
  CHECK(n <= 2242);
}
