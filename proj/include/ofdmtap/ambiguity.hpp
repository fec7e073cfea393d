#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "ofdmtap/types.hpp"

namespace ofdmtap {

/// Unnormalized sinc: sin(x)/x with sinc(0) = 1. The removable singularity
/// is handled by the series 1 - x^2/6 below |x| = 1e-8.
double sinc(double x);

/// sum_{m=0}^{n-1} exp(j*m*theta), evaluated in closed form. Stable for any
/// theta, including near multiples of 2*pi.
cd geometric_phase_sum(int n, double theta);

/// sum_{k=1}^{n} exp(j*(k-1-floor(n/2))*theta): the same sum re-centered on
/// the DC bin.
cd centered_phase_sum(int n, double theta);

/// Narrowband transmit autocorrelation A(tau, nu) of the OFDM grid: the
/// inner product of the signal with a copy delayed by tau and shifted by nu,
/// normalized so a full unit-modulus grid gives A(0,0) = 1.

/// Full evaluation by direct summation over all symbol/subcarrier pairs,
/// including inter-symbol and inter-carrier cross terms weighted by the
/// window autocorrelation. Reference scale only: rejects K*L > 4096.
cd ambiguity_exact(const OfdmConfig& cfg, const SymbolGrid& x, double tau, double nu);

/// Same-cell approximation: (1/KL) sum |X(l,k)|^2 * phase(l, nu) * phase(k, tau).
cd ambiguity_approx(const OfdmConfig& cfg, const SymbolGrid& x, double tau, double nu);

/// Closed form of ambiguity_approx for unit-modulus symbols, honoring
/// cfg.null_set; evaluates the geometric sums exactly, so it matches the
/// explicit summation to rounding for any (tau, nu).
cd ambiguity_closed(const OfdmConfig& cfg, double tau, double nu);

/// Separable small-offset approximation
///   exp(-j*pi*K*tau/T) * sinc(pi*K*tau/T) * sinc(pi*L*nu*Td)
/// for a full unit-modulus grid. Keeps the conventional sinc-product shape;
/// accurate only for |tau| << T and |nu| << 1/Td.
cd ambiguity_sinc(const OfdmConfig& cfg, double tau, double nu);

/// Sinc-product approximation for the DC-nulled grid:
///   exp(-j*pi*K*tau/T) * cos(pi*(K/2+1)*tau/T) * sinc(pi*tau*K/(2T)) * sinc(pi*nu*Td*L).
/// Kept verbatim for comparison; ambiguity_approx/ambiguity_closed are the
/// authoritative values (see docs for the measured deviation).
cd ambiguity_sinc_null_dc(const OfdmConfig& cfg, double tau, double nu);

/// Memoized ambiguity_closed evaluation keyed on the (tau, nu) offset pair.
/// One instance per worker; not synchronized.
class AmbiguityCache {
 public:
  explicit AmbiguityCache(const OfdmConfig& cfg) : cfg_(cfg) {}
  cd value(double dtau, double dnu);
  std::size_t size() const { return map_.size(); }

 private:
  struct Key {
    std::uint64_t tau_bits, nu_bits;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };

  OfdmConfig cfg_;
  std::unordered_map<Key, cd, KeyHash> map_;
};

/// P x P Gram matrix of the model columns, built from the closed-form
/// ambiguity (entry ij = K*L*A(tau_i - tau_j, nu_j - nu_i)); column-major.
/// Hermitian by construction. Assumes unit-modulus symbols off the null set.
std::vector<cd> gram_matrix(const OfdmConfig& cfg, std::span<const double> taus,
                            std::span<const double> nus,
                            AmbiguityCache* cache = nullptr);

/// Length-P correlation vector: w_i = psi(nu_i)^H (Y .* conj(X)) phi(tau_i).
std::vector<cd> correlation_vector(const OfdmConfig& cfg, const SymbolGrid& y,
                                   const SymbolGrid& x, std::span<const double> taus,
                                   std::span<const double> nus);

/// Sampled |A| surface for export.
struct AmbiguityGrid {
  std::vector<double> tau_axis;  ///< seconds
  std::vector<double> nu_axis;   ///< Hz
  std::vector<cd> values;        ///< tau-major: values[ti * nu_axis.size() + ni]

  cd at(std::size_t ti, std::size_t ni) const { return values[ti * nu_axis.size() + ni]; }
  void validate() const;  // |A| <= 1 + 1e-9 everywhere
};

AmbiguityGrid sample_ambiguity(const OfdmConfig& cfg, std::span<const double> taus,
                               std::span<const double> nus);

}  // namespace ofdmtap
