#include "ofdmtap/signal_model.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "ofdmtap/kernels.hpp"
#include "ofdmtap/rng.hpp"

namespace ofdmtap {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

SymbolGrid generate_symbols(const OfdmConfig& cfg, const SymbolSource& src,
                            std::uint64_t seed) {
  cfg.validate();
  SymbolGrid x(cfg.symbols, cfg.subcarriers);
  if (src.kind == Constellation::AllOnes) {
    for (int k = 0; k < cfg.subcarriers; ++k) {
      if (cfg.is_null1(k + 1)) continue;
      cd* c = x.col(k);
      for (int l = 0; l < cfg.symbols; ++l) c[l] = cd{1.0, 0.0};
    }
    return x;
  }
  if (src.psk_order < 2) throw std::invalid_argument("psk order must be >= 2");
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(0, src.psk_order - 1);
  // Entries drawn in storage order so the grid is reproducible per seed.
  for (int k = 0; k < cfg.subcarriers; ++k) {
    if (cfg.is_null1(k + 1)) continue;
    cd* c = x.col(k);
    for (int l = 0; l < cfg.symbols; ++l) {
      c[l] = std::polar(1.0, kTwoPi * pick(rng) / src.psk_order);
    }
  }
  return x;
}

void fill_phase_ramp(cd* out, std::size_t n, double phase0, double dphase) {
  constexpr std::size_t kRebase = 64;
  const cd step = std::polar(1.0, dphase);
  cd z{1.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    if (i % kRebase == 0) {
      z = std::polar(1.0, phase0 + static_cast<double>(i) * dphase);
    }
    out[i] = z;
    z = cmul(z, step);
  }
}

void fill_doppler_steering(const OfdmConfig& cfg, double nu_hz, cd* out) {
  fill_phase_ramp(out, static_cast<std::size_t>(cfg.symbols), 0.0,
                  -kTwoPi * nu_hz * cfg.t_symbol);
}

std::vector<cd> doppler_steering(const OfdmConfig& cfg, double nu_hz) {
  std::vector<cd> v(cfg.symbols);
  fill_doppler_steering(cfg, nu_hz, v.data());
  return v;
}

void fill_delay_steering(const OfdmConfig& cfg, double tau_s, cd* out) {
  const double dphase = kTwoPi * tau_s / cfg.t_useful;
  fill_phase_ramp(out, static_cast<std::size_t>(cfg.subcarriers),
                  -dphase * cfg.center_shift(), dphase);
}

std::vector<cd> delay_steering(const OfdmConfig& cfg, double tau_s) {
  std::vector<cd> v(cfg.subcarriers);
  fill_delay_steering(cfg, tau_s, v.data());
  return v;
}

SymbolGrid channel_coeffs(const OfdmConfig& cfg, const MultipathChannel& chan) {
  cfg.validate();
  chan.validate();
  SymbolGrid h(cfg.symbols, cfg.subcarriers);
  std::vector<cd> psi(cfg.symbols), phi(cfg.subcarriers);
  const auto& ops = kernels::active();
  for (const ChannelTap& tap : chan.taps) {
    fill_doppler_steering(cfg, tap.doppler, psi.data());
    fill_delay_steering(cfg, tap.delay, phi.data());
    for (int k = 0; k < cfg.subcarriers; ++k) {
      ops.axpy(h.col(k), cmul(tap.gain, std::conj(phi[k])), psi.data(), psi.size());
    }
  }
  return h;
}

SymbolGrid channel_coeffs_direct(const OfdmConfig& cfg, const MultipathChannel& chan) {
  cfg.validate();
  chan.validate();
  SymbolGrid h(cfg.symbols, cfg.subcarriers);
  for (int k = 0; k < cfg.subcarriers; ++k) {
    const double shift = k - cfg.center_shift();  // k is 0-based: (k+1)-1-floor(K/2)
    cd* c = h.col(k);
    for (int l = 0; l < cfg.symbols; ++l) {
      cd sum{};
      for (const ChannelTap& tap : chan.taps) {
        const double phase =
            -kTwoPi * (tap.doppler * cfg.t_symbol * l + shift * tap.delay / cfg.t_useful);
        sum += cmul(tap.gain, std::polar(1.0, phase));
      }
      c[l] = sum;
    }
  }
  return h;
}

SymbolGrid apply_channel(const SymbolGrid& x, const SymbolGrid& h, const NoiseSpec& noise) {
  if (!x.same_shape(h)) throw std::invalid_argument("grid dimensions do not match");
  SymbolGrid y(x.rows(), x.cols());
  kernels::active().hadamard(y.data(), h.data(), x.data(), y.size());
  if (noise.sigma2 > 0.0) {
    Rng rng(noise.seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise.sigma2 / 2.0));
    cd* d = y.data();
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      d[i] += cd{re, im};
    }
  }
  return y;
}

std::vector<cd> omega_matrix(const OfdmConfig& cfg, const SymbolGrid& x,
                             std::span<const double> taus, std::span<const double> nus) {
  cfg.validate();
  if (taus.size() != nus.size() || taus.empty()) {
    throw std::invalid_argument("need matching, nonempty tau/nu lists");
  }
  const std::size_t kl = cfg.grid_size();
  std::vector<cd> omega(kl * taus.size());
  std::vector<cd> psi(cfg.symbols), phi(cfg.subcarriers);
  for (std::size_t p = 0; p < taus.size(); ++p) {
    fill_doppler_steering(cfg, nus[p], psi.data());
    fill_delay_steering(cfg, taus[p], phi.data());
    cd* colbase = omega.data() + p * kl;
    for (int k = 0; k < cfg.subcarriers; ++k) {
      const cd phik = std::conj(phi[k]);
      const cd* xc = x.col(k);
      cd* oc = colbase + static_cast<std::size_t>(k) * cfg.symbols;
      for (int l = 0; l < cfg.symbols; ++l) {
        oc[l] = cmul(xc[l], cmul(psi[l], phik));
      }
    }
  }
  return omega;
}

cd steering_correlation(const OfdmConfig& cfg, const SymbolGrid& g, double tau_s,
                        double nu_hz) {
  if (g.rows() != cfg.symbols || g.cols() != cfg.subcarriers) {
    throw std::invalid_argument("grid dimensions do not match config");
  }
  std::vector<cd> psi(cfg.symbols), phi(cfg.subcarriers), row(cfg.subcarriers);
  fill_doppler_steering(cfg, nu_hz, psi.data());
  fill_delay_steering(cfg, tau_s, phi.data());
  const auto& ops = kernels::active();
  for (int k = 0; k < cfg.subcarriers; ++k) {
    row[k] = ops.dotc(psi.data(), g.col(k), psi.size());
  }
  return ops.dotu(row.data(), phi.data(), row.size());
}

}  // namespace ofdmtap
