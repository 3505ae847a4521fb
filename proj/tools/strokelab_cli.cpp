// strokelab: command-line front end for ingest, analysis, simulation and fitting.
//
// Exit codes: 0 success, 2 input error, 3 fit stopped on its evaluation budget
// (the result is still written).
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "strokelab/daq_ingest.hpp"
#include "strokelab/dsp.hpp"
#include "strokelab/error.hpp"
#include "strokelab/fitting.hpp"
#include "strokelab/kinematics.hpp"
#include "strokelab/propagation.hpp"
#include "strokelab/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace strokelab;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitBudget = 3;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

Recording load_recording(const fs::path& path) {
  if (!fs::exists(path)) throw InputError("no such file: " + path.string());
  if (path.extension() == ".csv") return daq::read_acceleration_csv(path);
  return daq::read_recording_file(path);
}

std::vector<Recording> load_all(const std::vector<std::string>& paths) {
  std::vector<Recording> recs;
  for (const auto& p : paths) recs.push_back(load_recording(p));
  return recs;
}

// out.csv -> out.2.csv when several inputs each get their own file.
fs::path numbered(const fs::path& base, std::size_t index, std::size_t count) {
  if (count <= 1) return base;
  fs::path p = base;
  p.replace_filename(base.stem().string() + "." + std::to_string(index) + base.extension().string());
  return p;
}

bool looks_like_csv(const std::vector<std::uint8_t>& bytes) {
  const std::string head = "time_s";
  return bytes.size() >= head.size() && std::equal(head.begin(), head.end(), bytes.begin());
}

// --- ingest -----------------------------------------------------------------

struct IngestArgs {
  std::string in, cal, out, format = "auto", body = "csv";
  double sample_rate = kDefaultSampleRate;
};

int run_ingest(const IngestArgs& a) {
  const auto cal = a.cal.empty() ? daq::CalibrationParams{} : report::parse_calibration(read_json(a.cal));
  cal.validate();
  const auto body = a.body == "binary" ? daq::BodyFormat::Binary : daq::BodyFormat::Csv;
  const auto bytes = read_bytes(a.in);
  if (bytes.empty()) throw Error(Errc::EmptyStream, "input is empty");

  const bool csv = a.format == "csv" || (a.format == "auto" && looks_like_csv(bytes));
  if (csv) {
    const auto rec = daq::read_acceleration_csv(a.in);
    daq::write_recording_file(rec, a.out, body);
    std::cout << "converted " << rec.sample_count() << " samples x " << rec.channel_count() << " channels\n";
    return 0;
  }

  const auto decoded = daq::decode_stream(bytes);
  const auto result = daq::frames_to_recording(decoded.frames, cal, ChannelLayout::default_layout(), a.sample_rate);
  daq::write_recording_file(result.recording, a.out, body, cal);

  const std::size_t warnings = decoded.resync_events + result.gaps.size() + result.duplicates;
  std::cout << "frames " << decoded.frames.size() << ", samples " << result.recording.sample_count() << '\n'
            << "resync events " << decoded.resync_events << " (" << decoded.skipped_bytes << " bytes skipped)\n"
            << "gaps " << result.gaps.size() << " (" << result.interpolated_frames() << " frames interpolated)\n"
            << "duplicates " << result.duplicates << '\n'
            << "warnings " << warnings << '\n';
  for (const auto& g : result.gaps) {
    std::cerr << "warning: " << g.missing << " frame(s) missing after sample " << g.after_sample << ", interpolated\n";
  }
  if (decoded.resync_events > 0) std::cerr << "warning: stream resynchronized " << decoded.resync_events << " time(s)\n";
  return 0;
}

// --- envelope -----------------------------------------------------------------

struct EnvelopeArgs {
  std::vector<std::string> recs;
  double window = dsp::kDefaultEnvelopeWindow;
  std::size_t hop = 1;
  std::string out, svg;
};

int run_envelope(const EnvelopeArgs& a) {
  const auto recs = load_all(a.recs);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto env = dsp::envelope_of(recs[i], a.window, a.hop);
    auto out = open_out(numbered(a.out, i, recs.size()));
    report::write_envelope_csv(env, out);
    if (!a.svg.empty()) {
      auto svg = open_out(numbered(a.svg, i, recs.size()));
      report::write_envelope_svg(env, svg, {800, 450, "RMS envelope: " + fs::path(a.recs[i]).filename().string()});
    }
  }
  return 0;
}

// --- spectrum -----------------------------------------------------------------

struct SpectrumArgs {
  std::vector<std::string> recs;
  dsp::FrameSpec frame;
  std::string out, svg;
};

int run_spectrum(const SpectrumArgs& a) {
  a.frame.validate();
  const auto recs = load_all(a.recs);
  const auto stats = dsp::aggregate_spectra(recs, a.frame);
  auto out = open_out(a.out);
  report::write_spectrum_csv(stats, out);
  if (!a.svg.empty()) {
    auto svg = open_out(a.svg);
    report::write_spectrum_svg(stats, svg, {800, 450, "Power spectrum, " + std::to_string(recs.size()) + " recording(s)"});
  }
  std::cout << "members " << stats.member_count << ", frames " << stats.frame_count << '\n';
  return 0;
}

// --- kinematics ---------------------------------------------------------------

struct KinematicsArgs {
  std::vector<std::string> recs;
  double window = dsp::kDefaultEnvelopeWindow;
  std::size_t hop = 1;
  std::string out;
};

int run_kinematics(const KinematicsArgs& a) {
  json all = json::array();
  for (const auto& path : a.recs) {
    const auto rec = load_recording(path);
    const auto k = kinematics::analyze(dsp::envelope_of(rec, a.window, a.hop), rec.layout());
    if (!k.monotonic) std::cerr << "warning: " << path << ": peak times are not monotonic in position\n";
    auto j = report::to_json(k);
    j["recording"] = path;
    all.push_back(std::move(j));
  }
  auto out = open_out(a.out);
  out << all.dump(2) << '\n';
  return 0;
}

// --- simulate -----------------------------------------------------------------

struct SimulateArgs {
  std::string model, out;
  std::optional<std::uint64_t> seed;
};

int run_simulate(const SimulateArgs& a) {
  auto cfg = report::parse_simulation_config(a.model.empty() ? json::object() : read_json(a.model));
  if (a.seed) cfg.stroke.seed = *a.seed;
  const auto rec = propagation::simulate_stroke(cfg.stroke, cfg.propagation, cfg.sensors)
                       .with_meta({{"source", "simulate"},
                                   {"velocity", std::to_string(cfg.stroke.velocity)},
                                   {"seed", std::to_string(cfg.stroke.seed)}});
  daq::write_recording_file(rec, a.out, cfg.body);
  std::cout << "wrote " << rec.sample_count() << " samples x " << rec.channel_count() << " channels\n";
  return 0;
}

// --- fit ------------------------------------------------------------------------

struct FitArgs {
  std::string target, config, out, render;
};

int run_fit(const FitArgs& a) {
  const auto cfg = report::parse_fit_config(a.config.empty() ? json::object() : read_json(a.config));
  const auto target = load_recording(a.target);
  const auto result = fitting::fit(target, cfg.fit, cfg.propagation);

  auto j = report::to_json(result);
  j["config"] = report::to_json(cfg.fit);
  j["propagation"] = report::to_json(cfg.propagation);
  auto out = open_out(a.out);
  out << j.dump(2) << '\n';
  out.close();

  if (!a.render.empty()) {
    propagation::SensorSetup setup;
    setup.layout = target.layout();
    setup.sample_rate = target.sample_rate();
    PropagationParams quiet = cfg.propagation;
    quiet.noise_sigma = 0.0;
    const auto rendered = propagation::render_sequence(result.best, quiet, setup, target.sample_count());
    daq::write_recording_file(rendered.with_meta({{"source", "fit"}}), a.render);
  }

  std::cout << "objective " << result.objective << " (initial " << result.initial_objective << "), "
            << result.evaluations << " evaluations\n";
  if (!result.converged) {
    std::cerr << "warning: evaluation budget exhausted before convergence; best-so-far written\n";
    return kExitBudget;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"strokelab: vibrotactile stroke recording analysis and actuator fitting"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* ing = app.add_subcommand("ingest", "Decode a frame stream or acceleration CSV into a .htrec recording");
  ing->add_option("--in", ingest.in, "Input: binary 43-byte frame stream or acceleration CSV")->required();
  ing->add_option("--cal", ingest.cal, "Calibration JSON (v_ref, v_zero_g[3], sensitivity, g); empty for defaults");
  ing->add_option("--out", ingest.out, "Output .htrec file")->required();
  ing->add_option("--format", ingest.format, "Input format")->check(CLI::IsMember({"auto", "stream", "csv"}));
  ing->add_option("--body", ingest.body, "Recording body encoding")->check(CLI::IsMember({"csv", "binary"}));
  ing->add_option("--sample-rate", ingest.sample_rate, "Frame rate of the stream, Hz")->check(CLI::PositiveNumber);

  EnvelopeArgs envelope;
  auto* env = app.add_subcommand("envelope", "Per-channel detrended RMS envelopes");
  env->add_option("--rec", envelope.recs, "Recording files (.htrec or acceleration .csv)")->required();
  env->add_option("--window", envelope.window, "RMS window length, s")->check(CLI::PositiveNumber);
  env->add_option("--hop", envelope.hop, "Input samples between envelope samples")->check(CLI::PositiveNumber);
  env->add_option("--out", envelope.out, "Envelope CSV; with several inputs, out.N.csv per input")->required();
  env->add_option("--svg", envelope.svg, "Optional SVG plot, numbered like --out");

  SpectrumArgs spectrum;
  auto* spec = app.add_subcommand("spectrum", "Mean and std of sliding-window power spectra over all recordings");
  spec->add_option("--rec", spectrum.recs, "Recording files (.htrec or acceleration .csv)")->required();
  spec->add_option("--nfft", spectrum.frame.n_fft, "Frame length, power of two >= 8");
  spec->add_option("--beta", spectrum.frame.beta, "Kaiser window shape");
  spec->add_option("--hop", spectrum.frame.hop, "Samples between frames")->check(CLI::PositiveNumber);
  spec->add_option("--out", spectrum.out, "Spectrum CSV (freq_hz, mean, std, frame_count)")->required();
  spec->add_option("--svg", spectrum.svg, "Optional SVG plot, mean with +/-1 std band over 0-500 Hz");

  KinematicsArgs kin;
  auto* kcmd = app.add_subcommand("kinematics", "Stroke velocity, duration and uniformity per recording");
  kcmd->add_option("--rec", kin.recs, "Recording files (.htrec or acceleration .csv)")->required();
  kcmd->add_option("--window", kin.window, "RMS window length, s")->check(CLI::PositiveNumber);
  kcmd->add_option("--hop", kin.hop, "Input samples between envelope samples")->check(CLI::PositiveNumber);
  kcmd->add_option("--out", kin.out, "JSON array, one entry per recording")->required();

  SimulateArgs sim;
  auto* scmd = app.add_subcommand("simulate", "Synthesize a stroke recording with the propagation model");
  scmd->add_option("--model", sim.model, "Simulation JSON (stroke, propagation, sensors, body); empty for defaults");
  scmd->add_option("--out", sim.out, "Output .htrec file")->required();
  scmd->add_option("--seed", sim.seed, "RNG seed for carrier phases and noise; overrides stroke.seed");

  FitArgs fitargs;
  auto* fcmd = app.add_subcommand("fit", "Fit an actuator sequence to a target recording");
  fcmd->add_option("--target", fitargs.target, "Target recording (.htrec or acceleration .csv)")->required();
  fcmd->add_option("--config", fitargs.config, "Fit JSON (weights, free parameters, budget, analysis, propagation); empty for defaults");
  fcmd->add_option("--out", fitargs.out, "FitResult JSON")->required();
  fcmd->add_option("--render", fitargs.render, "Optional .htrec of the best sequence rendered noise-free");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*ing) return run_ingest(ingest);
    if (*env) return run_envelope(envelope);
    if (*spec) return run_spectrum(spectrum);
    if (*kcmd) return run_kinematics(kin);
    if (*scmd) return run_simulate(sim);
    if (*fcmd) return run_fit(fitargs);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const json::exception& e) {
    std::cerr << "error: bad JSON value: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
