#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ofdmtap/estimator.hpp"
#include "ofdmtap/montecarlo.hpp"
#include "ofdmtap/signal_model.hpp"
#include "ofdmtap/types.hpp"
#include "ofdmtap/waveform.hpp"

namespace ofdmtap {

/// Experiment description parsed from a sectioned key=value file. Parsing is
/// strict: unknown sections, unknown keys, and duplicate keys are errors.
/// Units are embedded in key names (tau_max_ns, nu_min_hz, t_useful_us).
struct RunConfig {
  OfdmConfig ofdm;
  SymbolSource symbols;
  std::uint64_t symbol_seed = 0;

  enum class ChannelMode { None, Explicit, Scenario };
  ChannelMode channel_mode = ChannelMode::None;
  MultipathChannel channel_taps;  ///< when ChannelMode::Explicit

  // scenario geometry; trials/seed/snr grid live in the sim section
  struct ScenarioGeometry {
    int num_taps = 0;
    std::vector<double> pdp_db;
    double tau_min = 0.0, tau_max = 0.0;
    double nu_min = 0.0, nu_max = 0.0;
    double min_delay_gap = 0.0, min_doppler_gap = 0.0;
  };
  std::optional<ScenarioGeometry> scenario;

  bool has_estimator = false;
  EstimatorOptions estimator;
  SearchRegion region;

  bool has_sim = false;
  int trials = 0;
  std::vector<double> snr_db;
  std::uint64_t seed = 0;
  int threads = 0;

  std::string output_dir = ".";

  struct AmbiguityGridSpec {
    double tau_min = 0.0, tau_max = 0.0;
    int tau_points = 0;
    double nu_min = 0.0, nu_max = 0.0;
    int nu_points = 0;
  };
  std::optional<AmbiguityGridSpec> ambiguity;

  struct ValidateSpec {
    WaveformConfig wcfg;
    double in_cp_tau = 0.0, in_cp_nu = 0.0;
    double violating_tau = 0.0, violating_nu = 0.0;
  };
  std::optional<ValidateSpec> validate;

  static RunConfig load(const std::filesystem::path& path);
};

/// Stitches the scenario geometry and the sim parameters into a sweep spec.
ScenarioSpec make_scenario(const RunConfig& rc);

}  // namespace ofdmtap
