#include "strokelab/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "strokelab/error.hpp"
#include "strokelab/kinematics.hpp"
#include "strokelab/nelder_mead.hpp"

namespace strokelab::fitting {

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double energy(const std::vector<double>& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

propagation::SensorSetup setup_for(const FitTarget& target) {
  propagation::SensorSetup setup;
  setup.layout = target.layout;
  setup.sample_rate = target.sample_rate;
  return setup;
}

double target_duration(const FitTarget& target) {
  return static_cast<double>(target.n_samples) / target.sample_rate;
}

// Indices of the strongest non-DC bins with non-zero mean, strongest first.
std::vector<std::size_t> strongest_bins(const SpectrumStats& spec, std::size_t count) {
  std::vector<std::size_t> bins;
  for (std::size_t k = 0; k < spec.mean.size(); ++k) {
    if (spec.bin_freqs[k] > 0.0 && spec.bin_freqs[k] <= kMaxCarrierHz && spec.mean[k] > 0.0) bins.push_back(k);
  }
  std::stable_sort(bins.begin(), bins.end(), [&](std::size_t a, std::size_t b) { return spec.mean[a] > spec.mean[b]; });
  if (bins.size() > count) bins.resize(count);
  return bins;
}

}  // namespace

void FitConfig::validate() const {
  if (!(w_env >= 0.0 && w_spec >= 0.0) || (w_env == 0.0 && w_spec == 0.0)) {
    throw Error(Errc::InvalidArgument, "objective weights must be >= 0 and not both zero");
  }
  if (max_evaluations < 1) throw Error(Errc::InvalidArgument, "evaluation budget must be >= 1");
  if (!(tolerance >= 0.0)) throw Error(Errc::InvalidArgument, "tolerance must be >= 0");
  for (double s : {onset_step, duration_step, amplitude_step, carrier_step}) {
    if (!(s > 0.0)) throw Error(Errc::InvalidArgument, "simplex step fractions must be > 0");
  }
  analysis.frame.validate();
}

FitTarget prepare_target(const Recording& target, const AnalysisConfig& analysis) {
  FitTarget t;
  t.layout = target.layout();
  t.sample_rate = target.sample_rate();
  t.n_samples = target.sample_count();
  t.envelope = dsp::envelope_of(target, analysis.window_len, analysis.envelope_hop);

  double env_max = 0.0;
  for (const auto& ch : t.envelope.per_channel) {
    for (double v : ch) env_max = std::max(env_max, v);
  }
  if (!(env_max > 0.0)) throw Error(Errc::DegenerateTarget, "target envelope is all zero");

  const auto peaks = kinematics::detect_peaks(t.envelope);
  t.peak_times = kinematics::peak_times(peaks);
  for (const auto& p : peaks) t.peak_value = std::max(t.peak_value, p.value);
  t.kinematics = kinematics::estimate_kinematics(std::span<const double>(t.peak_times), t.layout);
  t.aligned = dsp::align_envelopes(t.envelope, t.peak_times, analysis.aligned_points);
  t.spectrum = dsp::aggregate_spectra(std::span<const Recording>(&target, 1), analysis.frame);

  for (const auto& ch : t.aligned.per_channel) t.envelope_energy += energy(ch);
  t.spectrum_energy = energy(t.spectrum.mean);
  if (!(t.envelope_energy > 0.0)) throw Error(Errc::DegenerateTarget, "aligned target envelope is all zero");
  if (!(t.spectrum_energy > 0.0)) throw Error(Errc::DegenerateTarget, "target spectrum is all zero");
  return t;
}

ObjectiveTerms objective_terms(const ActuationSequence& seq, const FitTarget& target,
                               const PropagationParams& params, const FitConfig& cfg) {
  if (!(target.envelope_energy > 0.0) || !(target.spectrum_energy > 0.0)) {
    throw Error(Errc::DegenerateTarget, "target envelope or spectrum is all zero");
  }
  PropagationParams quiet = params;
  quiet.noise_sigma = 0.0;
  const auto sim = propagation::render_sequence(seq, quiet, setup_for(target), target.n_samples);
  const auto& analysis = cfg.analysis;

  ObjectiveTerms terms;
  if (cfg.w_env > 0.0) {
    const auto env = dsp::envelope_of(sim, analysis.window_len, analysis.envelope_hop);
    dsp::AlignedEnvelope aligned;
    try {
      const auto peaks = kinematics::detect_peaks(env);
      aligned = dsp::align_envelopes(env, kinematics::peak_times(peaks), analysis.aligned_points);
    } catch (const Error& e) {
      if (e.code() != Errc::FlatChannel && e.code() != Errc::NonMonotonicPeaks) throw;
      aligned = dsp::align_envelopes(env, target.peak_times, analysis.aligned_points);
      terms.self_aligned = false;
    }
    double num = 0.0;
    for (std::size_t c = 0; c < aligned.per_channel.size(); ++c) {
      num += squared_distance(aligned.per_channel[c], target.aligned.per_channel[c]);
    }
    terms.envelope = num / target.envelope_energy;
  }
  if (cfg.w_spec > 0.0) {
    const auto stats = dsp::aggregate_spectra(std::span<const Recording>(&sim, 1), analysis.frame);
    terms.spectral = squared_distance(stats.mean, target.spectrum.mean) / target.spectrum_energy;
  }
  terms.total = cfg.w_env * terms.envelope + cfg.w_spec * terms.spectral;
  return terms;
}

double objective(const ActuationSequence& seq, const FitTarget& target, const PropagationParams& params,
                 const FitConfig& cfg) {
  return objective_terms(seq, target, params, cfg).total;
}

ActuationSequence heuristic_init(const StrokeKinematics& kin, const Envelope& target_env,
                                 const SpectrumStats& target_spec, const ChannelLayout& layout,
                                 const AnalysisConfig& analysis) {
  if (!std::isfinite(kin.velocity) || kin.velocity == 0.0 || kin.peak_times.size() != layout.size()) {
    throw Error(Errc::InvalidArgument, "kinematics must carry a finite non-zero velocity and one peak per channel");
  }
  const double soa = layout.mean_pitch() / std::abs(kin.velocity);
  const auto contact = kinematics::stroke_duration_per_channel(target_env, analysis.contact_threshold);
  const double duration = std::clamp(median(contact), kMinDuration, kMaxDuration);

  double peak = 0.0;
  for (const auto& ch : target_env.per_channel) peak = std::max(peak, *std::max_element(ch.begin(), ch.end()));
  // A unit-RMS-normalized carrier at amplitude A has RMS A / sqrt(2).
  const double amplitude = std::sqrt(2.0) * peak;

  const double first_peak = *std::min_element(kin.peak_times.begin(), kin.peak_times.end());
  const double earliest = std::max(0.0, first_peak - duration / 2.0);

  const auto bins = strongest_bins(target_spec, 3);
  if (bins.empty()) throw Error(Errc::DegenerateTarget, "target spectrum has no non-DC power");
  CarrierSpec carrier;
  for (std::size_t k : bins) carrier.components.push_back({target_spec.bin_freqs[k], std::sqrt(target_spec.mean[k])});

  return ActuationSequence::uniform(layout, earliest, kin.velocity > 0.0 ? soa : -soa, duration, amplitude,
                                    carrier.normalized());
}

// ---------------------------------------------------------------------------

ParameterMap::ParameterMap(const ActuationSequence& base, const FitTarget& target, const FitConfig& cfg)
    : base_(base), cfg_(cfg) {
  base_.validate();
  const std::size_t n = base_.activations.size();
  const double total = target_duration(target);
  const auto& acts = base_.activations;
  forward_ = base_.is_forward();
  const auto [lo_it, hi_it] = std::minmax_element(acts.begin(), acts.end(),
                                                  [](const Activation& a, const Activation& b) { return a.onset < b.onset; });
  earliest_onset_ = lo_it->onset;
  const double soa = n > 1 ? (hi_it->onset - lo_it->onset) / static_cast<double>(n - 1) : 0.0;
  double mean_duration = 0.0, mean_amplitude = 0.0;
  for (const auto& a : acts) {
    mean_duration += a.duration / static_cast<double>(n);
    mean_amplitude += a.peak_amplitude / static_cast<double>(n);
  }
  const double amp_hi = std::max(kAmplitudeBoundFactor * target.peak_value, mean_amplitude);

  if (cfg.onsets == OnsetMode::UniformSoa) {
    if (n > 1) {
      const double hi = std::max((total - earliest_onset_) / static_cast<double>(n - 1), soa);
      add("soa", soa, 0.0, hi, cfg.onset_step * (soa > 0.0 ? soa : hi));
    }
  } else {
    const double scale = soa > 0.0 ? soa : mean_duration;
    for (std::size_t j = 0; j < n; ++j) {
      add("onset" + std::to_string(j), acts[j].onset, std::min(0.0, acts[j].onset), std::max(total, acts[j].onset),
          cfg.onset_step * scale);
    }
  }

  auto duration_param = [&](std::string name, double value) {
    const double v = std::clamp(value, kMinDuration, kMaxDuration);
    add(std::move(name), v, kMinDuration, kMaxDuration, cfg.duration_step * v);
  };
  if (cfg.durations == DurationMode::Shared) {
    duration_param("duration", mean_duration);
  } else {
    for (std::size_t j = 0; j < n; ++j) duration_param("duration" + std::to_string(j), acts[j].duration);
  }

  auto amplitude_param = [&](std::string name, double value) {
    add(std::move(name), value, 0.0, amp_hi, cfg.amplitude_step * (value > 0.0 ? value : amp_hi));
  };
  if (cfg.amplitudes == AmplitudeMode::Shared) {
    amplitude_param("amplitude", mean_amplitude);
  } else if (cfg.amplitudes == AmplitudeMode::PerActuator) {
    for (std::size_t j = 0; j < n; ++j) amplitude_param("amplitude" + std::to_string(j), acts[j].peak_amplitude);
  }

  if (cfg.free_carrier_amplitudes) {
    double biggest = 0.0;
    for (const auto& c : base_.carrier.components) biggest = std::max(biggest, c.amplitude);
    const double hi = kAmplitudeBoundFactor * (biggest > 0.0 ? biggest : 1.0);
    for (std::size_t k = 0; k < base_.carrier.components.size(); ++k) {
      const double a = base_.carrier.components[k].amplitude;
      add("carrier" + std::to_string(k), a, 0.0, hi, cfg.carrier_step * (a > 0.0 ? a : hi));
    }
  }
  if (initial_.empty()) throw Error(Errc::InvalidArgument, "fit configuration leaves no free parameters");
}

void ParameterMap::add(std::string name, double value, double lo, double hi, double step) {
  names_.push_back(std::move(name));
  initial_.push_back(std::clamp(value, lo, hi));
  lower_.push_back(lo);
  upper_.push_back(hi);
  steps_.push_back(step);
}

ActuationSequence ParameterMap::apply(std::span<const double> x) const {
  ActuationSequence seq = base_;
  auto& acts = seq.activations;
  const std::size_t n = acts.size();
  std::size_t i = 0;
  if (cfg_.onsets == OnsetMode::UniformSoa) {
    if (n > 1) {
      const double soa = x[i++];
      for (std::size_t j = 0; j < n; ++j) {
        const double rank = forward_ ? static_cast<double>(j) : static_cast<double>(n - 1 - j);
        acts[j].onset = earliest_onset_ + rank * soa;
      }
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) acts[j].onset = x[i++];
  }
  if (cfg_.durations == DurationMode::Shared) {
    const double d = x[i++];
    for (auto& a : acts) a.duration = d;
  } else {
    for (auto& a : acts) a.duration = x[i++];
  }
  if (cfg_.amplitudes == AmplitudeMode::Shared) {
    const double amp = x[i++];
    for (auto& a : acts) a.peak_amplitude = amp;
  } else if (cfg_.amplitudes == AmplitudeMode::PerActuator) {
    for (auto& a : acts) a.peak_amplitude = x[i++];
  }
  if (cfg_.free_carrier_amplitudes) {
    for (auto& c : seq.carrier.components) c.amplitude = x[i++];
  }
  return seq;
}

FitResult refine(const ActuationSequence& init, const FitTarget& target, const FitConfig& cfg,
                 const PropagationParams& params) {
  cfg.validate();
  const ParameterMap map(init, target, cfg);
  NelderMeadOptions options;
  options.max_evaluations = cfg.max_evaluations;
  options.ftol = cfg.tolerance;
  options.initial_step = map.steps();

  auto fn = [&](std::span<const double> x) { return objective(map.apply(x), target, params, cfg); };
  const auto nm = nelder_mead(fn, map.initial(), Bounds{map.lower(), map.upper()}, options);

  FitResult result;
  result.initial = map.apply(map.initial());
  result.initial_objective = nm.best_trace.front();
  result.best = map.apply(nm.x);
  result.objective = nm.value;
  result.terms = objective_terms(result.best, target, params, cfg);
  result.evaluations = nm.evaluations;
  result.converged = nm.converged;
  result.trace = nm.best_trace;
  return result;
}

FitResult fit(const Recording& target, const FitConfig& cfg, const PropagationParams& params) {
  cfg.validate();
  const auto prepared = prepare_target(target, cfg.analysis);
  const auto init = heuristic_init(prepared.kinematics, prepared.envelope, prepared.spectrum, prepared.layout,
                                   cfg.analysis);
  FitResult result = refine(init, prepared, cfg, params);
  if (cfg.carrier_candidate_bins == 0) return result;

  // Discrete outer pass over carrier frequencies: try each candidate bin in
  // each component slot at the current best, then re-run the simplex.
  const auto candidates = strongest_bins(prepared.spectrum, cfg.carrier_candidate_bins);
  bool changed = false;
  for (std::size_t slot = 0; slot < result.best.carrier.components.size(); ++slot) {
    for (std::size_t k : candidates) {
      if (result.evaluations >= cfg.max_evaluations) break;
      const double f = prepared.spectrum.bin_freqs[k];
      const auto& comps = result.best.carrier.components;
      if (std::any_of(comps.begin(), comps.end(), [&](const CarrierComponent& c) { return c.frequency == f; })) continue;
      ActuationSequence trial = result.best;
      trial.carrier.components[slot].frequency = f;
      const double value = objective(trial, prepared, params, cfg);
      ++result.evaluations;
      if (value < result.objective) {
        result.best = trial;
        result.objective = value;
        changed = true;
      }
      result.trace.push_back(result.objective);
    }
  }
  if (changed && result.evaluations < cfg.max_evaluations) {
    FitConfig inner = cfg;
    inner.max_evaluations = cfg.max_evaluations - result.evaluations;
    const FitResult again = refine(result.best, prepared, inner, params);
    result.best = again.best;
    result.objective = again.objective;
    result.evaluations += again.evaluations;
    result.converged = again.converged;
    result.trace.insert(result.trace.end(), again.trace.begin(), again.trace.end());
  }
  result.terms = objective_terms(result.best, prepared, params, cfg);
  return result;
}

}  // namespace strokelab::fitting
