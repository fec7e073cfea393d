#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ofdmtap/types.hpp"

namespace ofdmtap {

enum class Constellation { AllOnes, Psk };

struct SymbolSource {
  Constellation kind = Constellation::AllOnes;
  int psk_order = 4;  ///< used when kind == Psk, must be >= 2
};

/// Transmit grid: null columns are exactly zero, every other entry has unit
/// modulus. AllOnes sets them to 1; Psk draws uniformly from the order-n
/// constellation. Deterministic for a given seed.
SymbolGrid generate_symbols(const OfdmConfig& cfg, const SymbolSource& src,
                            std::uint64_t seed);

/// out[i] = exp(j*(phase0 + i*dphase)). Recurrence with periodic re-anchoring,
/// so modulus drift stays below ~1e-13 for any length.
void fill_phase_ramp(cd* out, std::size_t n, double phase0, double dphase);

/// Doppler steering vector, length L: entry l (1-based) is
/// exp(-j*2*pi*(l-1)*nu*t_symbol).
void fill_doppler_steering(const OfdmConfig& cfg, double nu_hz, cd* out);
std::vector<cd> doppler_steering(const OfdmConfig& cfg, double nu_hz);

/// Delay steering vector, length K: entry k (1-based) is
/// exp(+j*2*pi*(k-1-floor(K/2))*tau/t_useful).
void fill_delay_steering(const OfdmConfig& cfg, double tau_s, cd* out);
std::vector<cd> delay_steering(const OfdmConfig& cfg, double tau_s);

/// Frequency-domain channel coefficients H: rank-one steering products
/// accumulated per tap (the factored matrix form).
SymbolGrid channel_coeffs(const OfdmConfig& cfg, const MultipathChannel& chan);

/// Same quantity evaluated entrywise with a single fused phase per
/// (symbol, subcarrier, tap). Slower; kept as an independent evaluation path.
SymbolGrid channel_coeffs_direct(const OfdmConfig& cfg, const MultipathChannel& chan);

/// Y = H .* X + Z with Z i.i.d. circular complex Gaussian of per-entry
/// variance sigma2 (real/imag each sigma2/2). Deterministic given the seed.
SymbolGrid apply_channel(const SymbolGrid& x, const SymbolGrid& h, const NoiseSpec& noise);

/// The KL x P model matrix, column-major; column p stacks
/// X(l,k) * psi_l(nu_p) * conj(phi_k(tau_p)) with the symbol index running
/// fastest (matching SymbolGrid::data() layout).
std::vector<cd> omega_matrix(const OfdmConfig& cfg, const SymbolGrid& x,
                             std::span<const double> taus, std::span<const double> nus);

/// psi(nu)^H * (G) * phi(tau) for an L x K grid G.
cd steering_correlation(const OfdmConfig& cfg, const SymbolGrid& g, double tau_s,
                        double nu_hz);

}  // namespace ofdmtap
