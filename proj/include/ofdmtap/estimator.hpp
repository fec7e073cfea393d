#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ofdmtap/types.hpp"

namespace ofdmtap {

/// Prior search box plus the grid-shrink schedule of the coarse-to-fine
/// 2-D peak search.
struct SearchRegion {
  double tau_min = 0.0, tau_max = 0.0;  ///< seconds
  double nu_min = 0.0, nu_max = 0.0;    ///< Hz
  int delay_bins = 16;                  ///< grid points per iteration, delay axis
  int doppler_bins = 16;                ///< grid points per iteration, Doppler axis
  double shrink = 1.0;                  ///< half-width of the recentered window, in bins
  int max_iterations = 8;
  double eps_tau = 1e-11;  ///< stop once both bin spacings fall below eps, seconds
  double eps_nu = 1e-3;    ///< Hz

  void validate() const;
};

enum class EstimatorDomain { MatchedY, ZeroForcingH };

struct EstimatorOptions {
  int num_taps = 1;                          ///< taps to extract
  int refine_iterations = 0;                 ///< full re-estimation sweeps; 0 disables
  std::optional<double> min_amplitude;       ///< early exit once |a_hat| drops below
  EstimatorDomain domain = EstimatorDomain::MatchedY;
  std::optional<double> early_stop_tol;      ///< relative residual improvement threshold
  bool validate_gram = false;  ///< rebuild the Gram matrix from the model columns

  void validate() const;
};

struct TapEstimate {
  cd gain;
  double delay = 0.0;    ///< seconds
  double doppler = 0.0;  ///< Hz
};

struct EstimateSet {
  std::vector<TapEstimate> taps;
  std::vector<double> residual_trace;  ///< ||E||^2 after each cancellation / sweep
  int refine_iters_used = 0;
  bool grid_densified = false;  ///< first search grid was widened to meet the
                                ///< half-main-lobe spacing rule
};

struct PeakResult {
  double tau = 0.0;
  double nu = 0.0;
  cd corr;  ///< complex correlation at the returned grid point
  bool densified = false;
};

/// Raised when the Gram matrix of the current estimates is numerically
/// singular, i.e. two detected taps nearly coincide in delay/Doppler.
class CollidingTapsError : public std::runtime_error {
 public:
  CollidingTapsError(int i, int j);
  int tap_i, tap_j;
};

/// psi(nu)^H (E .* conj(X)) phi(tau); the squared magnitude of this value is
/// the 2-D periodogram. In the ZeroForcingH domain the conj(X) product is
/// skipped (E already lives in channel units).
cd periodogram_point(const OfdmConfig& cfg, const SymbolGrid& e, const SymbolGrid& x,
                     double tau, double nu,
                     EstimatorDomain domain = EstimatorDomain::MatchedY);

/// Coarse-to-fine 2-D peak search: evaluates the correlation on a bin grid,
/// recenters a shrunken window on the argmax (clamped to the region), and
/// repeats until the iteration cap or the eps resolution is reached. Argmax
/// ties break toward the lowest (doppler, delay) grid index.
PeakResult bisection_peak(const OfdmConfig& cfg, const SymbolGrid& e, const SymbolGrid& x,
                          const SearchRegion& region,
                          EstimatorDomain domain = EstimatorDomain::MatchedY);

/// Solves R a = w for the tap gains (R Hermitian PSD). Throws
/// CollidingTapsError when the condition estimate exceeds 1e12.
std::vector<cd> ls_amplitudes(std::span<const cd> r, std::span<const cd> w);

/// Successive cancellation: detect the strongest remaining tap, re-solve all
/// gains jointly, subtract the full reconstruction, repeat. Returns fewer
/// than num_taps entries when min_amplitude stops the recursion early.
EstimateSet initial_estimate(const OfdmConfig& cfg, const SymbolGrid& y,
                             const SymbolGrid& x, const EstimatorOptions& opts,
                             const SearchRegion& region);

/// Parallel cancellation refinement: each sweep re-estimates every tap on the
/// residual with all other taps (previous sweep's values) removed, then
/// re-solves the gains jointly. With early_stop_tol set, sweeps stop once the
/// relative residual improvement falls below the tolerance and the
/// best-residual iterate is returned.
EstimateSet refine(const OfdmConfig& cfg, const SymbolGrid& y, const SymbolGrid& x,
                   const EstimateSet& initial, const EstimatorOptions& opts,
                   const SearchRegion& region);

/// Single-tap estimation variance floors in normalized units:
/// var[nu_hat * t_symbol] and var[tau_hat / t_useful].
struct CrlbBounds {
  double var_nu_td = 0.0;
  double var_tau_over_t = 0.0;
};

CrlbBounds crlb_single_tap(const OfdmConfig& cfg, double sigma2, double gain_power);

}  // namespace ofdmtap
