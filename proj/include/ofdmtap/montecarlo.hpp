#pragma once

#include <cstdint>
#include <vector>

#include "ofdmtap/estimator.hpp"
#include "ofdmtap/types.hpp"

namespace ofdmtap {

/// Random-channel experiment: fixed power profile, uniform delay/Doppler
/// draws constrained to a minimum pairwise separation, swept over SNR.
struct ScenarioSpec {
  int num_taps = 0;
  std::vector<double> pdp_db;  ///< per-tap power, dB (one entry per tap)
  double tau_min = 0.0, tau_max = 0.0;  ///< seconds
  double nu_min = 0.0, nu_max = 0.0;    ///< Hz
  double min_delay_gap = 0.0;           ///< seconds
  double min_doppler_gap = 0.0;         ///< Hz
  std::vector<double> snr_grid_db;
  int trials = 0;
  std::uint64_t seed = 0;

  void validate() const;

  /// The reference vehicular profile: 3 taps at 0/-10/-20 dB, delays on
  /// (0, 200) ns with 66.67 ns minimum separation, Dopplers on (-500, 500) Hz
  /// with 333.33 Hz minimum separation.
  static ScenarioSpec vehicular(int trials, std::uint64_t seed);
};

/// Draws one channel realization: delays resampled until the minimum pairwise
/// gap holds, then sorted; Dopplers likewise, unsorted; magnitudes fixed from
/// the power profile; phases uniform. Throws when 1e5 draws cannot satisfy
/// the separation.
MultipathChannel sample_taps(const ScenarioSpec& spec, std::uint64_t trial_seed);

/// Nearest-estimate assignment in resolution-cell units (delay in t_useful/K,
/// Doppler in 1/(L*t_symbol)). A trial counts as a miss unless the map from
/// true taps to estimates is a bijection.
struct TapMatch {
  bool miss = false;
  std::vector<int> estimate_for_tap;  ///< index into the estimate list, per true tap
  std::vector<double> distance;       ///< cell-space distance, per true tap
};

TapMatch match_estimates(const OfdmConfig& cfg, const MultipathChannel& truth,
                         const EstimateSet& est);

struct TapErrorStats {
  double rms_tau = 0.0;   ///< seconds
  double rms_nu = 0.0;    ///< Hz
  double rms_gain = 0.0;  ///< |gain_hat - gain| (diagnostic; not a standard metric)
};

struct SnrStats {
  double snr_db = 0.0;
  double sigma2 = 0.0;
  int trials = 0;
  int estimator_errors = 0;           ///< trials aborted by a solve failure
  int misses_initial = 0, misses_refined = 0;
  std::vector<TapErrorStats> initial, refined;  ///< per true tap, over detected trials
  std::vector<double> crlb_std_tau;  ///< seconds, per tap at its profile power
  std::vector<double> crlb_std_nu;   ///< Hz
};

struct TrialStats {
  std::vector<SnrStats> per_snr;
};

struct RunOptions {
  int threads = 0;  ///< 0 = hardware concurrency
};

/// Full sweep: per SNR and trial, draw a channel, synthesize the noisy
/// observation with an all-ones grid, run successive cancellation plus
/// refinement, match against truth, and aggregate. Per-trial seeds derive
/// from (seed, snr index, trial index), so results are byte-identical across
/// serial and parallel runs.
TrialStats run_trials(const OfdmConfig& cfg, const ScenarioSpec& spec,
                      const EstimatorOptions& opts, const SearchRegion& region,
                      const RunOptions& run = {});

}  // namespace ofdmtap
