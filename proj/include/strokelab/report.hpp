#pragma once

// Serialization of analysis products: envelope and spectrum CSV, JSON for
// kinematics, sequences, configs and fit results, and SVG figures.
//
// Envelope CSV:  time_s,ch0,ch1,...      (time = window center)
// Spectrum CSV:  freq_hz,mean,std,frame_count
//
// Non-finite doubles are written to JSON as null and read back as +inf.

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "strokelab/core_model.hpp"
#include "strokelab/daq_ingest.hpp"
#include "strokelab/fitting.hpp"
#include "strokelab/propagation.hpp"

namespace strokelab::report {

void write_envelope_csv(const Envelope& env, std::ostream& out);
// Rate and window length are recovered from the time column; hop cannot be,
// so the caller supplies it.
Envelope read_envelope_csv(std::istream& in, std::size_t hop = 1);

void write_spectrum_csv(const SpectrumStats& stats, std::ostream& out);
SpectrumStats read_spectrum_csv(std::istream& in);

struct SvgStyle {
  int width = 800;
  int height = 450;
  std::string title;
};

// One polyline per channel over time.
void write_envelope_svg(const Envelope& env, std::ostream& out, const SvgStyle& style = {});
// Mean line with a +/-1 std band, x axis 0-500 Hz.
void write_spectrum_svg(const SpectrumStats& stats, std::ostream& out, const SvgStyle& style = {});

// Model/config files used by the command-line tool. Missing keys take the
// library defaults.
struct SimulationConfig {
  propagation::StrokeModel stroke;
  PropagationParams propagation;
  propagation::SensorSetup sensors;
  daq::BodyFormat body = daq::BodyFormat::Csv;
};

struct FitFileConfig {
  fitting::FitConfig fit;
  PropagationParams propagation;
};

SimulationConfig parse_simulation_config(const nlohmann::json& j);
FitFileConfig parse_fit_config(const nlohmann::json& j);
daq::CalibrationParams parse_calibration(const nlohmann::json& j);

nlohmann::json to_json(const StrokeKinematics& k);
StrokeKinematics kinematics_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CarrierSpec& c);
CarrierSpec carrier_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ActuationSequence& s);
ActuationSequence sequence_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PropagationParams& p);
PropagationParams propagation_from_json(const nlohmann::json& j);

nlohmann::json to_json(const daq::CalibrationParams& c);

nlohmann::json to_json(const fitting::FitResult& r);
fitting::FitResult fit_result_from_json(const nlohmann::json& j);

nlohmann::json to_json(const fitting::FitConfig& c);

}  // namespace strokelab::report
