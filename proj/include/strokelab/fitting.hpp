#pragma once

// Inverse problem: find an actuator activation sequence whose rendered skin
// response matches a target recording.
//
// The objective compares aligned RMS envelopes and the mean power spectrum,
// each normalized by the target's energy:
//
//   J = w_env  * sum_i |E_i^sim - E_i^tgt|^2 / sum_i |E_i^tgt|^2
//     + w_spec * |mean^sim - mean^tgt|^2 / |mean^tgt|^2
//
// Simulated quantities go through the same envelope/spectrum pipeline as the
// target, on a noise-free render of the same length.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "strokelab/core_model.hpp"
#include "strokelab/dsp.hpp"
#include "strokelab/propagation.hpp"

namespace strokelab::fitting {

inline constexpr double kMinDuration = 0.02;  // s
inline constexpr double kMaxDuration = 2.0;   // s
inline constexpr double kAmplitudeBoundFactor = 10.0;

struct AnalysisConfig {
  double window_len = dsp::kDefaultEnvelopeWindow;
  std::size_t envelope_hop = 1;
  dsp::FrameSpec frame;
  std::size_t aligned_points = dsp::kAlignedPoints;
  double contact_threshold = 0.1;
};

enum class OnsetMode { UniformSoa, PerActuator };
enum class DurationMode { Shared, PerActuator };
enum class AmplitudeMode { Fixed, Shared, PerActuator };

struct FitConfig {
  double w_env = 1.0;
  double w_spec = 1.0;
  OnsetMode onsets = OnsetMode::UniformSoa;
  DurationMode durations = DurationMode::Shared;
  AmplitudeMode amplitudes = AmplitudeMode::Shared;
  bool free_carrier_amplitudes = false;
  std::size_t max_evaluations = 2000;
  double tolerance = 1e-6;  // relative, on the objective
  // Initial simplex step per parameter class, as a fraction of its start value.
  double onset_step = 0.2;
  double duration_step = 0.2;
  double amplitude_step = 0.2;
  double carrier_step = 0.2;
  // When > 0, the carrier frequencies are revisited in a discrete outer loop
  // over this many highest-power target bins.
  std::size_t carrier_candidate_bins = 0;
  AnalysisConfig analysis;

  void validate() const;
};

// Everything the objective needs from the target recording.
struct FitTarget {
  ChannelLayout layout = ChannelLayout::default_layout();
  double sample_rate = kDefaultSampleRate;
  std::size_t n_samples = 0;
  Envelope envelope;
  std::vector<double> peak_times;
  double peak_value = 0.0;  // largest channel envelope peak
  StrokeKinematics kinematics;
  dsp::AlignedEnvelope aligned;
  SpectrumStats spectrum;
  double envelope_energy = 0.0;
  double spectrum_energy = 0.0;
};

// Runs the analysis pipeline on a target. Throws DegenerateTarget for an
// all-zero envelope or spectrum, plus upstream dsp/kinematics errors.
FitTarget prepare_target(const Recording& target, const AnalysisConfig& analysis = {});

struct ObjectiveTerms {
  double total = 0.0;
  double envelope = 0.0;
  double spectral = 0.0;
  // False when the simulated envelope had no monotonic peak sequence and was
  // aligned on the target's peak times instead.
  bool self_aligned = true;
};

ObjectiveTerms objective_terms(const ActuationSequence& seq, const FitTarget& target,
                               const PropagationParams& params, const FitConfig& cfg);
double objective(const ActuationSequence& seq, const FitTarget& target, const PropagationParams& params,
                 const FitConfig& cfg);

// Uniform-SOA starting point: SOA = pitch / |velocity|, duration = median
// contact duration, amplitude from the envelope peak, carrier from the three
// strongest non-DC bins (amplitude ~ sqrt(PSD)).
ActuationSequence heuristic_init(const StrokeKinematics& kin, const Envelope& target_env,
                                 const SpectrumStats& target_spec, const ChannelLayout& layout,
                                 const AnalysisConfig& analysis = {});

struct FitResult {
  ActuationSequence best;
  double objective = 0.0;
  ObjectiveTerms terms;
  std::size_t evaluations = 0;
  bool converged = false;  // false: budget exhausted, best-so-far returned
  std::vector<double> trace;  // best objective after each evaluation
  ActuationSequence initial;
  double initial_objective = 0.0;
};

// heuristic_init followed by refine().
FitResult fit(const Recording& target, const FitConfig& cfg, const PropagationParams& params);

// Bounded Nelder-Mead over the free parameters selected by cfg, starting from
// init. Deterministic for fixed inputs.
FitResult refine(const ActuationSequence& init, const FitTarget& target, const FitConfig& cfg,
                 const PropagationParams& params);

// Free-parameter view of a sequence, as used by refine().
class ParameterMap {
 public:
  ParameterMap(const ActuationSequence& base, const FitTarget& target, const FitConfig& cfg);

  std::size_t size() const noexcept { return initial_.size(); }
  const std::vector<double>& initial() const noexcept { return initial_; }
  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }
  const std::vector<double>& steps() const noexcept { return steps_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  ActuationSequence apply(std::span<const double> x) const;

 private:
  void add(std::string name, double value, double lo, double hi, double step);

  ActuationSequence base_;
  FitConfig cfg_;
  bool forward_ = true;
  double earliest_onset_ = 0.0;
  std::vector<double> initial_, lower_, upper_, steps_;
  std::vector<std::string> names_;
};

}  // namespace strokelab::fitting
