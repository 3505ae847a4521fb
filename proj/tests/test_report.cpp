#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "strokelab/dsp.hpp"
#include "strokelab/error.hpp"
#include "strokelab/report.hpp"
#include "test_support.hpp"

using namespace strokelab;
using namespace strokelab::report;
using nlohmann::json;

namespace {

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("envelope CSV round trip") {
  std::mt19937_64 rng(12);
  const auto rec = testing::random_recording(rng, 700);
  const auto env = dsp::envelope_of(rec, 0.2, 3);
  std::stringstream io;
  write_envelope_csv(env, io);
  const auto back = read_envelope_csv(io, 3);
  CHECK(back.per_channel == env.per_channel);
  CHECK(back.sample_rate == doctest::Approx(env.sample_rate).epsilon(1e-9));
  CHECK(back.window_len == doctest::Approx(env.window_len).epsilon(1e-12));
  CHECK(back.hop == 3);
}

TEST_CASE("envelope CSV errors") {
  std::stringstream empty;
  CHECK_THROWS_AS(read_envelope_csv(empty), Error);
  std::stringstream wrong("t,ch0\n0.1,1\n0.2,2\n");
  CHECK_THROWS_AS(read_envelope_csv(wrong), Error);
  std::stringstream ragged("time_s,ch0,ch1\n0.1,1,2\n0.2,2\n");
  try {
    read_envelope_csv(ragged);
    FAIL("expected TruncatedData");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TruncatedData);
  }
}

TEST_CASE("spectrum CSV round trip") {
  std::mt19937_64 rng(13);
  const std::vector<Recording> recs{testing::random_recording(rng, 400), testing::random_recording(rng, 300)};
  const auto stats = dsp::aggregate_spectra(recs);
  std::stringstream io;
  write_spectrum_csv(stats, io);
  const auto back = read_spectrum_csv(io);
  CHECK(back.bin_freqs == stats.bin_freqs);
  CHECK(back.mean == stats.mean);
  CHECK(back.std == stats.std);
  CHECK(back.frame_count == stats.frame_count);
}

TEST_CASE("SVG figures carry one trace per channel and the std band") {
  const auto x = testing::sine(900, 125.0, 2000.0);
  const auto rec = testing::uniform_recording(x);
  std::ostringstream env_svg;
  write_envelope_svg(dsp::envelope_of(rec), env_svg, {800, 450, "single stroke"});
  const auto e = env_svg.str();
  CHECK(e.rfind("<svg", 0) == 0);
  CHECK(count_of(e, "<polyline") == 6);
  CHECK(e.find("single stroke") != std::string::npos);
  CHECK(e.find("</svg>") != std::string::npos);

  std::ostringstream spec_svg;
  const std::vector<Recording> recs{rec};
  write_spectrum_svg(dsp::aggregate_spectra(recs), spec_svg);
  const auto s = spec_svg.str();
  CHECK(count_of(s, "<polygon") == 1);
  CHECK(count_of(s, "<polyline") == 1);
  CHECK(s.find(">500<") != std::string::npos);
}

TEST_CASE("kinematics JSON round trip, including non-finite values") {
  StrokeKinematics k;
  k.velocity = -0.123456789;
  k.peak_times = {0.5, 0.4, 0.3};
  k.duration = 0.2;
  k.r_squared = 0.987;
  k.uniformity = std::numeric_limits<double>::infinity();
  k.monotonic = false;
  const auto text = to_json(k).dump();
  const auto back = kinematics_from_json(json::parse(text));
  CHECK(back.velocity == k.velocity);
  CHECK(back.peak_times == k.peak_times);
  CHECK(std::isinf(back.uniformity));
  CHECK_FALSE(back.monotonic);
  CHECK(json::parse(text).at("uniformity").is_null());
}

TEST_CASE("sequence and fit result JSON round trip") {
  auto seq = ActuationSequence::uniform(ChannelLayout::default_layout(), 0.1, 0.1, 0.15, 1.3,
                                        {{{125.0, 0.8}, {250.0, 0.6}}});
  seq.activations[2].ramp_fraction = 0.1;
  CHECK(sequence_from_json(json::parse(to_json(seq).dump())) == seq);

  fitting::FitResult r;
  r.best = seq;
  r.initial = seq.scaled(0.5);
  r.objective = 1.5e-7;
  r.initial_objective = 0.3;
  r.terms = {1.5e-7, 1e-7, 5e-8, true};
  r.evaluations = 42;
  r.converged = true;
  r.trace = {0.3, 0.1, 1.5e-7};
  const auto back = fit_result_from_json(json::parse(to_json(r).dump()));
  CHECK(back.best == r.best);
  CHECK(back.initial == r.initial);
  CHECK(back.objective == r.objective);
  CHECK(back.terms.envelope == r.terms.envelope);
  CHECK(back.evaluations == 42);
  CHECK(back.trace == r.trace);
}

TEST_CASE("config parsing defaults and overrides") {
  const auto sim = parse_simulation_config(json::object());
  CHECK(sim.stroke.velocity == propagation::StrokeModel{}.velocity);
  CHECK(sim.propagation.attenuation_length == 0.02);
  CHECK(sim.body == daq::BodyFormat::Csv);

  const auto custom = parse_simulation_config(json::parse(R"({
    "stroke": {"velocity": -0.2, "start_pos": 0.2, "end_pos": -0.1, "carrier": [{"frequency": 125, "amplitude": 1}]},
    "propagation": {"attenuation_length": null, "wave_speed": 8.0, "noise_sigma": 0.01},
    "sensors": {"positions": [0, 0.03, 0.06], "sample_rate": 1000, "axes_split": [0, 0, 2]},
    "body": "binary"})"));
  CHECK(custom.stroke.velocity == -0.2);
  CHECK(std::isinf(custom.propagation.attenuation_length));
  CHECK(custom.sensors.layout.size() == 3);
  CHECK(custom.sensors.axes_split[2] == 1.0);
  CHECK(custom.body == daq::BodyFormat::Binary);
  CHECK_THROWS(parse_simulation_config(json::parse(R"({"stroke": {"velocity": 0.1, "start_pos": 0.2, "end_pos": 0.0}})")));

  const auto fit = parse_fit_config(json::parse(R"({"amplitudes": "fixed", "max_evaluations": 50,
                                                     "analysis": {"hop": 4}})"));
  CHECK(fit.fit.amplitudes == fitting::AmplitudeMode::Fixed);
  CHECK(fit.fit.max_evaluations == 50);
  CHECK(fit.fit.analysis.frame.hop == 4);
  CHECK(fit.fit.analysis.window_len == 0.2);
  CHECK_THROWS(parse_fit_config(json::parse(R"({"onsets": "sideways"})")));
  // The serialized config parses back to itself.
  const auto again = parse_fit_config(to_json(fit.fit));
  CHECK(to_json(again.fit) == to_json(fit.fit));

  const auto cal = parse_calibration(json::parse(R"({"v_zero_g": [1.6, 1.65, 1.7], "sensitivity": 0.33})"));
  CHECK(cal.v_zero_g[2] == 1.7);
  CHECK(cal.sensitivity == 0.33);
  CHECK(cal.v_ref == 3.3);
  CHECK(parse_calibration(to_json(cal)) == cal);
}
