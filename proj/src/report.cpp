#include "strokelab/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "strokelab/error.hpp"
#include "text_util.hpp"

namespace strokelab::report {

using detail::format_double;
using detail::parse_double;
using nlohmann::json;

namespace {

[[noreturn]] void bad_csv(const std::string& what) { throw Error(Errc::MalformedHeader, what); }

std::vector<std::vector<double>> read_numeric_rows(std::istream& in, std::size_t columns) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != columns) throw Error(Errc::TruncatedData, "CSV row has wrong column count");
    std::vector<double> row;
    for (auto c : cells) {
      auto v = parse_double(c);
      if (!v) throw Error(Errc::TruncatedData, "unparsable CSV value");
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  return number_from(j.at(key));
}

// --- SVG --------------------------------------------------------------------

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

struct PlotFrame {
  PlotFrame(double x0_, double x1_, double y0_, double y1_, const SvgStyle& style)
      : x0(x0_), x1(x1_), y0(y0_), y1(y1_), width(style.width), height(style.height) {}

  double x0, x1, y0, y1;  // data ranges
  double left = 70, right = 20, top = 40, bottom = 50;
  int width, height;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(4) << v;
  return s.str();
}

void svg_open(std::ostream& out, const PlotFrame& f, const SvgStyle& style, const std::string& xlabel,
              const std::string& ylabel) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
      << "\" viewBox=\"0 0 " << f.width << ' ' << f.height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!style.title.empty()) {
    out << "<text x=\"" << f.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
        << style.title << "</text>\n";
  }
  const double ax0 = f.px(f.x0), ax1 = f.px(f.x1), ay0 = f.py(f.y0), ay1 = f.py(f.y1);
  out << "<g stroke=\"black\" stroke-width=\"1\">\n";
  out << "<line x1=\"" << ax0 << "\" y1=\"" << ay0 << "\" x2=\"" << ax1 << "\" y2=\"" << ay0 << "\"/>\n";
  out << "<line x1=\"" << ax0 << "\" y1=\"" << ay0 << "\" x2=\"" << ax0 << "\" y2=\"" << ay1 << "\"/>\n";
  out << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 5.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 5.0;
    out << "<line x1=\"" << f.px(xv) << "\" y1=\"" << ay0 << "\" x2=\"" << f.px(xv) << "\" y2=\"" << ay0 + 5
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << f.px(xv) << "\" y=\"" << ay0 + 18 << "\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n";
    out << "<line x1=\"" << ax0 - 5 << "\" y1=\"" << f.py(yv) << "\" x2=\"" << ax0 << "\" y2=\"" << f.py(yv)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ax0 - 8 << "\" y=\"" << f.py(yv) + 4 << "\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
  }
  out << "<text x=\"" << (ax0 + ax1) / 2 << "\" y=\"" << f.height - 12 << "\" text-anchor=\"middle\">" << xlabel
      << "</text>\n";
  out << "<text transform=\"translate(16," << (ay0 + ay1) / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << ylabel
      << "</text>\n</g>\n";
}

void polyline(std::ostream& out, const PlotFrame& f, const std::vector<double>& xs, const std::vector<double>& ys,
              const char* color) {
  out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
  // Thin very long traces to at most ~4 points per pixel column.
  const std::size_t stride = std::max<std::size_t>(1, xs.size() / (4 * static_cast<std::size_t>(f.width)));
  for (std::size_t i = 0; i < xs.size(); i += stride) out << f.px(xs[i]) << ',' << f.py(ys[i]) << ' ';
  if (!xs.empty() && (xs.size() - 1) % stride != 0) out << f.px(xs.back()) << ',' << f.py(ys.back());
  out << "\"/>\n";
}

}  // namespace

void write_envelope_csv(const Envelope& env, std::ostream& out) {
  out << "time_s";
  for (std::size_t c = 0; c < env.channel_count(); ++c) out << ",ch" << c;
  out << '\n';
  for (std::size_t k = 0; k < env.length(); ++k) {
    out << format_double(env.time_of(k));
    for (const auto& ch : env.per_channel) out << ',' << format_double(ch[k]);
    out << '\n';
  }
}

Envelope read_envelope_csv(std::istream& in, std::size_t hop) {
  std::string header;
  if (!std::getline(in, header)) bad_csv("empty envelope CSV");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const auto names = detail::split(header, ',');
  if (names.size() < 2 || names[0] != "time_s") bad_csv("envelope CSV must start with time_s");
  const auto rows = read_numeric_rows(in, names.size());
  if (rows.size() < 2) throw Error(Errc::TruncatedData, "envelope CSV needs at least two rows");
  Envelope env;
  env.hop = hop;
  env.window_len = 2.0 * rows.front()[0];
  env.sample_rate = static_cast<double>(rows.size() - 1) / (rows.back()[0] - rows.front()[0]);
  env.per_channel.assign(names.size() - 1, {});
  for (const auto& r : rows) {
    for (std::size_t c = 1; c < r.size(); ++c) env.per_channel[c - 1].push_back(r[c]);
  }
  env.validate();
  return env;
}

void write_spectrum_csv(const SpectrumStats& stats, std::ostream& out) {
  out << "freq_hz,mean,std,frame_count\n";
  for (std::size_t k = 0; k < stats.bin_freqs.size(); ++k) {
    out << format_double(stats.bin_freqs[k]) << ',' << format_double(stats.mean[k]) << ','
        << format_double(stats.std[k]) << ',' << stats.frame_count << '\n';
  }
}

SpectrumStats read_spectrum_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) bad_csv("empty spectrum CSV");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header != "freq_hz,mean,std,frame_count") bad_csv("unexpected spectrum CSV header");
  const auto rows = read_numeric_rows(in, 4);
  if (rows.empty()) throw Error(Errc::TruncatedData, "spectrum CSV has no rows");
  SpectrumStats s;
  for (const auto& r : rows) {
    s.bin_freqs.push_back(r[0]);
    s.mean.push_back(r[1]);
    s.std.push_back(r[2]);
  }
  s.frame_count = static_cast<std::size_t>(rows.front()[3]);
  s.validate();
  return s;
}

void write_envelope_svg(const Envelope& env, std::ostream& out, const SvgStyle& style) {
  double ymax = 0.0;
  for (const auto& ch : env.per_channel) {
    for (double v : ch) ymax = std::max(ymax, v);
  }
  const std::size_t n = env.length();
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) t[k] = env.time_of(k);
  const PlotFrame f(n ? t.front() : 0.0, n > 1 ? t.back() : 1.0, 0.0, ymax > 0.0 ? ymax * 1.05 : 1.0, style);
  svg_open(out, f, style, "time (s)", "RMS acceleration (m/s²)");
  for (std::size_t c = 0; c < env.channel_count(); ++c) {
    const char* color = kPalette[c % std::size(kPalette)];
    polyline(out, f, t, env.per_channel[c], color);
    out << "<text x=\"" << f.width - f.right - 40 << "\" y=\"" << f.top + 14 * (c + 1)
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color << "\">ch" << c << "</text>\n";
  }
  out << "</svg>\n";
}

void write_spectrum_svg(const SpectrumStats& stats, std::ostream& out, const SvgStyle& style) {
  double ymax = 0.0;
  for (std::size_t k = 0; k < stats.mean.size(); ++k) ymax = std::max(ymax, stats.mean[k] + stats.std[k]);
  const PlotFrame f(0.0, 500.0, 0.0, ymax > 0.0 ? ymax * 1.05 : 1.0, style);
  svg_open(out, f, style, "frequency (Hz)", "PSD ((m/s²)²/Hz)");
  out << "<polygon fill=\"#1f77b4\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
  for (std::size_t k = 0; k < stats.bin_freqs.size(); ++k) {
    out << f.px(stats.bin_freqs[k]) << ',' << f.py(stats.mean[k] + stats.std[k]) << ' ';
  }
  for (std::size_t k = stats.bin_freqs.size(); k-- > 0;) {
    out << f.px(stats.bin_freqs[k]) << ',' << f.py(std::max(0.0, stats.mean[k] - stats.std[k])) << ' ';
  }
  out << "\"/>\n";
  polyline(out, f, stats.bin_freqs, stats.mean, kPalette[0]);
  out << "</svg>\n";
}

// --- JSON -------------------------------------------------------------------

json to_json(const StrokeKinematics& k) {
  json times = json::array();
  for (double t : k.peak_times) times.push_back(number(t));
  return {{"velocity", number(k.velocity)}, {"peak_times", times},          {"duration", number(k.duration)},
          {"r_squared", number(k.r_squared)}, {"uniformity", number(k.uniformity)}, {"monotonic", k.monotonic}};
}

StrokeKinematics kinematics_from_json(const json& j) {
  StrokeKinematics k;
  k.velocity = number_from(j.at("velocity"));
  for (const auto& t : j.at("peak_times")) k.peak_times.push_back(number_from(t));
  k.duration = number_from(j.at("duration"));
  k.r_squared = number_from(j.at("r_squared"));
  k.uniformity = number_from(j.at("uniformity"));
  k.monotonic = j.value("monotonic", true);
  return k;
}

json to_json(const CarrierSpec& c) {
  json out = json::array();
  for (const auto& comp : c.components) out.push_back({{"frequency", comp.frequency}, {"amplitude", comp.amplitude}});
  return out;
}

CarrierSpec carrier_from_json(const json& j) {
  CarrierSpec c;
  for (const auto& comp : j) c.components.push_back({comp.at("frequency").get<double>(), comp.at("amplitude").get<double>()});
  c.validate();
  return c;
}

json to_json(const ActuationSequence& s) {
  json acts = json::array();
  for (const auto& a : s.activations) {
    acts.push_back({{"onset", a.onset}, {"duration", a.duration}, {"peak_amplitude", a.peak_amplitude},
                    {"ramp_fraction", a.ramp_fraction}});
  }
  return {{"actuator_positions", s.actuator_positions}, {"activations", acts}, {"carrier", to_json(s.carrier)}};
}

ActuationSequence sequence_from_json(const json& j) {
  ActuationSequence s;
  s.actuator_positions = j.at("actuator_positions").get<std::vector<double>>();
  for (const auto& a : j.at("activations")) {
    s.activations.push_back({a.at("onset").get<double>(), a.at("duration").get<double>(),
                             a.at("peak_amplitude").get<double>(), a.value("ramp_fraction", 0.25)});
  }
  s.carrier = carrier_from_json(j.at("carrier"));
  s.validate();
  return s;
}

json to_json(const PropagationParams& p) {
  return {{"attenuation_length", number(p.attenuation_length)},
          {"wave_speed", number(p.wave_speed)},
          {"noise_sigma", p.noise_sigma}};
}

PropagationParams propagation_from_json(const json& j) {
  PropagationParams p;
  p.attenuation_length = number_or(j, "attenuation_length", p.attenuation_length);
  p.wave_speed = number_or(j, "wave_speed", p.wave_speed);
  p.noise_sigma = j.value("noise_sigma", p.noise_sigma);
  p.validate();
  return p;
}

json to_json(const daq::CalibrationParams& c) {
  return {{"v_ref", c.v_ref}, {"v_zero_g", c.v_zero_g}, {"sensitivity", c.sensitivity}, {"g", c.g}};
}

daq::CalibrationParams parse_calibration(const json& j) {
  daq::CalibrationParams c;
  c.v_ref = j.value("v_ref", c.v_ref);
  if (j.contains("v_zero_g")) {
    const auto& z = j.at("v_zero_g");
    if (z.is_number()) {
      c.v_zero_g.fill(z.get<double>());
    } else {
      const auto v = z.get<std::vector<double>>();
      if (v.size() != kAxes) throw Error(Errc::InvalidArgument, "v_zero_g needs 3 values");
      std::copy(v.begin(), v.end(), c.v_zero_g.begin());
    }
  }
  c.sensitivity = j.value("sensitivity", c.sensitivity);
  c.g = j.value("g", c.g);
  c.validate();
  return c;
}

json to_json(const fitting::FitResult& r) {
  return {{"best", to_json(r.best)},
          {"objective", r.objective},
          {"envelope_term", r.terms.envelope},
          {"spectral_term", r.terms.spectral},
          {"self_aligned", r.terms.self_aligned},
          {"evaluations", r.evaluations},
          {"converged", r.converged},
          {"initial", to_json(r.initial)},
          {"initial_objective", r.initial_objective},
          {"trace", r.trace}};
}

fitting::FitResult fit_result_from_json(const json& j) {
  fitting::FitResult r;
  r.best = sequence_from_json(j.at("best"));
  r.objective = j.at("objective").get<double>();
  r.terms.envelope = j.at("envelope_term").get<double>();
  r.terms.spectral = j.at("spectral_term").get<double>();
  r.terms.self_aligned = j.value("self_aligned", true);
  r.terms.total = r.objective;
  r.evaluations = j.at("evaluations").get<std::size_t>();
  r.converged = j.at("converged").get<bool>();
  r.initial = sequence_from_json(j.at("initial"));
  r.initial_objective = j.at("initial_objective").get<double>();
  r.trace = j.at("trace").get<std::vector<double>>();
  return r;
}

namespace {

template <class Enum>
Enum enum_from(const json& j, const char* key, Enum fallback,
               std::initializer_list<std::pair<const char*, Enum>> names) {
  if (!j.contains(key)) return fallback;
  const auto s = j.at(key).get<std::string>();
  for (const auto& [name, value] : names) {
    if (s == name) return value;
  }
  throw Error(Errc::InvalidArgument, std::string("unknown value '") + s + "' for " + key);
}

const char* onset_name(fitting::OnsetMode m) { return m == fitting::OnsetMode::UniformSoa ? "uniform_soa" : "per_actuator"; }
const char* duration_name(fitting::DurationMode m) { return m == fitting::DurationMode::Shared ? "shared" : "per_actuator"; }
const char* amplitude_name(fitting::AmplitudeMode m) {
  switch (m) {
    case fitting::AmplitudeMode::Fixed: return "fixed";
    case fitting::AmplitudeMode::Shared: return "shared";
    case fitting::AmplitudeMode::PerActuator: return "per_actuator";
  }
  return "shared";
}

fitting::AnalysisConfig parse_analysis(const json& j) {
  fitting::AnalysisConfig a;
  a.window_len = j.value("window_len", a.window_len);
  a.envelope_hop = j.value("envelope_hop", a.envelope_hop);
  a.frame.n_fft = j.value("n_fft", a.frame.n_fft);
  a.frame.beta = j.value("beta", a.frame.beta);
  a.frame.hop = j.value("hop", a.frame.hop);
  a.aligned_points = j.value("aligned_points", a.aligned_points);
  a.contact_threshold = j.value("contact_threshold", a.contact_threshold);
  return a;
}

}  // namespace

json to_json(const fitting::FitConfig& c) {
  return {{"w_env", c.w_env},
          {"w_spec", c.w_spec},
          {"onsets", onset_name(c.onsets)},
          {"durations", duration_name(c.durations)},
          {"amplitudes", amplitude_name(c.amplitudes)},
          {"free_carrier_amplitudes", c.free_carrier_amplitudes},
          {"max_evaluations", c.max_evaluations},
          {"tolerance", c.tolerance},
          {"steps",
           {{"onset", c.onset_step}, {"duration", c.duration_step}, {"amplitude", c.amplitude_step}, {"carrier", c.carrier_step}}},
          {"carrier_candidate_bins", c.carrier_candidate_bins},
          {"analysis",
           {{"window_len", c.analysis.window_len},
            {"envelope_hop", c.analysis.envelope_hop},
            {"n_fft", c.analysis.frame.n_fft},
            {"beta", c.analysis.frame.beta},
            {"hop", c.analysis.frame.hop},
            {"aligned_points", c.analysis.aligned_points},
            {"contact_threshold", c.analysis.contact_threshold}}}};
}

FitFileConfig parse_fit_config(const json& j) {
  FitFileConfig out;
  auto& c = out.fit;
  c.w_env = j.value("w_env", c.w_env);
  c.w_spec = j.value("w_spec", c.w_spec);
  using fitting::AmplitudeMode;
  using fitting::DurationMode;
  using fitting::OnsetMode;
  c.onsets = enum_from(j, "onsets", c.onsets, {{"uniform_soa", OnsetMode::UniformSoa}, {"per_actuator", OnsetMode::PerActuator}});
  c.durations = enum_from(j, "durations", c.durations, {{"shared", DurationMode::Shared}, {"per_actuator", DurationMode::PerActuator}});
  c.amplitudes = enum_from(j, "amplitudes", c.amplitudes,
                           {{"fixed", AmplitudeMode::Fixed}, {"shared", AmplitudeMode::Shared}, {"per_actuator", AmplitudeMode::PerActuator}});
  c.free_carrier_amplitudes = j.value("free_carrier_amplitudes", c.free_carrier_amplitudes);
  c.max_evaluations = j.value("max_evaluations", c.max_evaluations);
  c.tolerance = j.value("tolerance", c.tolerance);
  if (j.contains("steps")) {
    const auto& s = j.at("steps");
    c.onset_step = s.value("onset", c.onset_step);
    c.duration_step = s.value("duration", c.duration_step);
    c.amplitude_step = s.value("amplitude", c.amplitude_step);
    c.carrier_step = s.value("carrier", c.carrier_step);
  }
  c.carrier_candidate_bins = j.value("carrier_candidate_bins", c.carrier_candidate_bins);
  if (j.contains("analysis")) c.analysis = parse_analysis(j.at("analysis"));
  if (j.contains("propagation")) out.propagation = propagation_from_json(j.at("propagation"));
  c.validate();
  return out;
}

SimulationConfig parse_simulation_config(const json& j) {
  SimulationConfig cfg;
  if (j.contains("stroke")) {
    const auto& s = j.at("stroke");
    auto& m = cfg.stroke;
    m.velocity = s.value("velocity", m.velocity);
    m.start_pos = s.value("start_pos", m.start_pos);
    m.end_pos = s.value("end_pos", m.end_pos);
    m.ramp_fraction = s.value("ramp_fraction", m.ramp_fraction);
    m.pre_roll = s.value("pre_roll", m.pre_roll);
    m.post_roll = s.value("post_roll", m.post_roll);
    m.seed = s.value("seed", m.seed);
    if (s.contains("carrier")) m.carrier = carrier_from_json(s.at("carrier"));
  }
  if (j.contains("propagation")) cfg.propagation = propagation_from_json(j.at("propagation"));
  if (j.contains("sensors")) {
    const auto& s = j.at("sensors");
    if (s.contains("positions")) cfg.sensors.layout = ChannelLayout(s.at("positions").get<std::vector<double>>());
    cfg.sensors.sample_rate = s.value("sample_rate", cfg.sensors.sample_rate);
    if (s.contains("axes_split")) {
      const auto v = s.at("axes_split").get<std::vector<double>>();
      if (v.size() != kAxes) throw Error(Errc::InvalidArgument, "axes_split needs 3 values");
      const double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
      if (!(norm > 0.0)) throw Error(Errc::InvalidArgument, "axes_split must be non-zero");
      for (std::size_t a = 0; a < kAxes; ++a) cfg.sensors.axes_split[a] = v[a] / norm;
    }
  }
  const auto body = j.value("body", std::string("csv"));
  if (body == "csv") cfg.body = daq::BodyFormat::Csv;
  else if (body == "binary") cfg.body = daq::BodyFormat::Binary;
  else throw Error(Errc::InvalidArgument, "body must be csv or binary");
  cfg.stroke.validate();
  cfg.sensors.validate();
  return cfg;
}

}  // namespace strokelab::report
