#pragma once

#include <optional>
#include <vector>

#include "ofdmtap/types.hpp"

namespace ofdmtap {

/// Reference-scale time-domain model. Midpoint sampling at `oversample`
/// samples per subcarrier interval T/K; the sample grid must land exactly on
/// cyclic-prefix and symbol boundaries.
struct WaveformConfig {
  int oversample = 16;
  enum class Window { Rectangular } window = Window::Rectangular;
  enum class Filter { Ideal } filter = Filter::Ideal;

  void validate(const OfdmConfig& cfg) const;  // alignment + sample budget
};

struct SampledWaveform {
  double dt = 0.0;          ///< sample spacing, seconds
  std::vector<cd> samples;  ///< sample i taken at t = (i + 0.5) * dt

  double time_at(std::size_t i) const { return (static_cast<double>(i) + 0.5) * dt; }
};

/// Baseband transmit waveform over [0, L * t_symbol].
SampledWaveform synth_tx(const OfdmConfig& cfg, const SymbolGrid& x,
                         const WaveformConfig& wcfg);

/// Per-tap delay (nearest-sample shift), Doppler rotation, and superposition;
/// optionally adds white sample noise scaled so the matched-filter output
/// noise variance matches the NoiseSpec.
SampledWaveform apply_ct_channel(const OfdmConfig& cfg, const SampledWaveform& tx,
                                 const MultipathChannel& chan, const WaveformConfig& wcfg,
                                 const std::optional<NoiseSpec>& noise = std::nullopt);

/// Correlates the received waveform against each transmitted subcarrier over
/// the post-prefix portion of each symbol. Scaled so a loopback (no channel,
/// no noise) returns the transmitted grid itself.
SymbolGrid matched_filter(const OfdmConfig& cfg, const SampledWaveform& rx,
                          const WaveformConfig& wcfg);

/// Autocorrelation of the rectangular window restricted to the matched-filter
/// integration span [t_cp, t_symbol]: value (b-a)/t_symbol *
/// exp(-j*pi*nu*(a+b)) * sinc(pi*nu*(b-a)) over the overlap [a, b].
/// At (0,0) this equals t_useful / t_symbol.
cd window_ambiguity(const OfdmConfig& cfg, const WaveformConfig& wcfg, double tau,
                    double nu);

/// Full-support window autocorrelation (integration over the whole symbol),
/// used by the exact grid autocorrelation sum.
cd window_ambiguity_full(const OfdmConfig& cfg, double tau, double nu);

}  // namespace ofdmtap
