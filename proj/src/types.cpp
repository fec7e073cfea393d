#include "ofdmtap/types.hpp"

#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "ofdmtap/kernels.hpp"

namespace ofdmtap {

OfdmConfig OfdmConfig::ieee80211(int symbols) {
  OfdmConfig cfg;
  cfg.subcarriers = 52;
  cfg.symbols = symbols;
  cfg.t_useful = 6.4e-6;
  cfg.t_cp = 1.6e-6;
  cfg.t_symbol = cfg.t_useful + cfg.t_cp;
  cfg.null_set = {cfg.subcarriers / 2 + 1};  // DC bin
  return cfg;
}

void OfdmConfig::validate() const {
  if (subcarriers < 2) throw std::invalid_argument("subcarriers must be >= 2");
  if (symbols < 2) throw std::invalid_argument("symbols must be >= 2");
  if (!(t_useful > 0.0)) throw std::invalid_argument("t_useful must be positive");
  if (t_cp < 0.0) throw std::invalid_argument("t_cp must be nonnegative");
  const double sum = t_useful + t_cp;
  if (std::abs(t_symbol - sum) > 1e-12 * sum) {
    throw std::invalid_argument("t_symbol must equal t_useful + t_cp");
  }
  std::set<int> seen;
  for (int k : null_set) {
    if (k < 1 || k > subcarriers) {
      throw std::invalid_argument("null subcarrier index out of range: " + std::to_string(k));
    }
    if (!seen.insert(k).second) {
      throw std::invalid_argument("duplicate null subcarrier index: " + std::to_string(k));
    }
  }
}

int OfdmConfig::active_subcarriers() const {
  return subcarriers - static_cast<int>(null_set.size());
}

bool OfdmConfig::is_null1(int k1) const {
  for (int k : null_set) {
    if (k == k1) return true;
  }
  return false;
}

void MultipathChannel::validate() const {
  if (taps.empty()) throw std::invalid_argument("channel needs at least one tap");
  for (const ChannelTap& t : taps) {
    if (t.delay < 0.0) throw std::invalid_argument("tap delays must be nonnegative");
  }
}

ModelLimitFlags MultipathChannel::limit_flags(const OfdmConfig& cfg) const {
  ModelLimitFlags f;
  for (const ChannelTap& t : taps) {
    if (t.delay >= cfg.t_cp) f.delay_exceeds_cp = true;
    if (std::abs(t.doppler) >= 1.0 / cfg.t_useful) f.doppler_exceeds_spacing = true;
  }
  return f;
}

double SymbolGrid::squared_norm() const {
  return kernels::active().sum_abs2(v_.data(), v_.size());
}

NoiseSpec NoiseSpec::from_snr_linear(const OfdmConfig& cfg, double snr_linear,
                                     std::uint64_t seed) {
  if (!(snr_linear > 0.0)) throw std::invalid_argument("snr must be positive");
  NoiseSpec n;
  n.snr = snr_linear;
  n.sigma2 = static_cast<double>(cfg.active_subcarriers()) / snr_linear;
  n.seed = seed;
  return n;
}

NoiseSpec NoiseSpec::from_snr_db(const OfdmConfig& cfg, double snr_db, std::uint64_t seed) {
  return from_snr_linear(cfg, std::pow(10.0, snr_db / 10.0), seed);
}

}  // namespace ofdmtap
