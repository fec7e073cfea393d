#include "ofdmtap/waveform.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "ofdmtap/ambiguity.hpp"
#include "ofdmtap/kernels.hpp"
#include "ofdmtap/rng.hpp"
#include "ofdmtap/signal_model.hpp"

namespace ofdmtap {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr long long kSampleBudget = 1LL << 24;

struct SampleLayout {
  double dt;
  long long per_symbol;  // samples per full symbol
  long long cp;          // samples covering the cyclic prefix
  long long total;
};

long long aligned_count(double duration, double dt, const char* what) {
  const double ratio = duration / dt;
  const long long n = std::llround(ratio);
  if (std::abs(ratio - static_cast<double>(n)) > 1e-9) {
    throw std::invalid_argument(std::string("sample grid does not align with ") + what);
  }
  return n;
}

SampleLayout layout_for(const OfdmConfig& cfg, const WaveformConfig& wcfg) {
  SampleLayout s{};
  s.dt = cfg.t_useful / (static_cast<double>(cfg.subcarriers) * wcfg.oversample);
  s.per_symbol = aligned_count(cfg.t_symbol, s.dt, "the symbol duration");
  s.cp = aligned_count(cfg.t_cp, s.dt, "the cyclic prefix");
  s.total = s.per_symbol * cfg.symbols;
  if (s.total > kSampleBudget) throw std::invalid_argument("sample budget exceeded");
  return s;
}

}  // namespace

void WaveformConfig::validate(const OfdmConfig& cfg) const {
  if (oversample < 4) throw std::invalid_argument("oversample must be >= 4");
  layout_for(cfg, *this);
}

SampledWaveform synth_tx(const OfdmConfig& cfg, const SymbolGrid& x,
                         const WaveformConfig& wcfg) {
  cfg.validate();
  wcfg.validate(cfg);
  if (x.rows() != cfg.symbols || x.cols() != cfg.subcarriers) {
    throw std::invalid_argument("grid dimensions do not match config");
  }
  const SampleLayout s = layout_for(cfg, wcfg);
  SampledWaveform tx;
  tx.dt = s.dt;
  tx.samples.assign(s.total, cd{});
  const double amp = 1.0 / std::sqrt(static_cast<double>(cfg.subcarriers) * cfg.symbols *
                                     cfg.t_symbol);
  // Subcarrier phases are referenced per symbol (the discrete inverse
  // transform construction), so identical rows synthesize identical symbol
  // waveforms; one ramp per subcarrier serves every symbol.
  std::vector<cd> ramp(s.per_symbol);
  const auto& ops = kernels::active();
  for (int k = 0; k < cfg.subcarriers; ++k) {
    bool have_ramp = false;
    const double shift = k - cfg.center_shift();
    for (int l = 0; l < cfg.symbols; ++l) {
      const cd xlk = x(l, k);
      if (xlk == cd{}) continue;
      if (!have_ramp) {
        const double dphase = kTwoPi * shift * s.dt / cfg.t_useful;
        fill_phase_ramp(ramp.data(), ramp.size(),
                        kTwoPi * shift * (0.5 * s.dt - cfg.t_cp) / cfg.t_useful, dphase);
        have_ramp = true;
      }
      ops.axpy(tx.samples.data() + static_cast<long long>(l) * s.per_symbol, amp * xlk,
               ramp.data(), ramp.size());
    }
  }
  return tx;
}

SampledWaveform apply_ct_channel(const OfdmConfig& cfg, const SampledWaveform& tx,
                                 const MultipathChannel& chan, const WaveformConfig& wcfg,
                                 const std::optional<NoiseSpec>& noise) {
  chan.validate();
  const SampleLayout s = layout_for(cfg, wcfg);
  if (tx.samples.size() != static_cast<std::size_t>(s.total)) {
    throw std::invalid_argument("waveform length does not match config");
  }
  SampledWaveform rx;
  rx.dt = tx.dt;
  rx.samples.assign(tx.samples.size(), cd{});
  const long long n = static_cast<long long>(tx.samples.size());
  for (const ChannelTap& tap : chan.taps) {
    const long long shift = std::llround(tap.delay / tx.dt);
    if (shift >= n) throw std::invalid_argument("tap delay exceeds the sampled duration");
    // e^{-j 2 pi nu t} at the midpoint instants, scaled by the tap gain
    cd rot = cmul(tap.gain, std::polar(1.0, -kTwoPi * tap.doppler * 0.5 * tx.dt));
    const cd step = std::polar(1.0, -kTwoPi * tap.doppler * tx.dt);
    for (long long i = 0; i < n; ++i) {
      if (i >= shift) {
        rx.samples[i] += cmul(rot, tx.samples[i - shift]);
      }
      rot = cmul(rot, step);
      if ((i & 1023) == 1023) {
        rot = cmul(tap.gain,
                   std::polar(1.0, -kTwoPi * tap.doppler * (static_cast<double>(i) + 1.5) *
                                       tx.dt));
      }
    }
  }
  if (noise.has_value() && noise->sigma2 > 0.0) {
    // White sample noise sized so the matched-filter output variance per grid
    // entry equals sigma2.
    const double kl = static_cast<double>(cfg.subcarriers) * cfg.symbols;
    const double var_t =
        noise->sigma2 * cfg.t_useful / (kl * cfg.t_symbol * tx.dt);
    Rng rng(noise->seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(var_t / 2.0));
    for (cd& v : rx.samples) {
      v += cd{gauss(rng), gauss(rng)};
    }
  }
  return rx;
}

SymbolGrid matched_filter(const OfdmConfig& cfg, const SampledWaveform& rx,
                          const WaveformConfig& wcfg) {
  cfg.validate();
  const SampleLayout s = layout_for(cfg, wcfg);
  if (rx.samples.size() != static_cast<std::size_t>(s.total)) {
    throw std::invalid_argument("waveform length does not match config");
  }
  SymbolGrid y(cfg.symbols, cfg.subcarriers);
  const long long win = s.per_symbol - s.cp;
  std::vector<cd> ramp(win);
  const auto& ops = kernels::active();
  // Raw correlation carries 1/sqrt(KL*Td); scaling by KL*Td/T makes a
  // loopback return the transmitted grid exactly.
  const double scale = std::sqrt(static_cast<double>(cfg.subcarriers) * cfg.symbols *
                                 cfg.t_symbol) *
                       rx.dt / cfg.t_useful;
  // same per-symbol phase reference as the synthesizer
  for (int k = 0; k < cfg.subcarriers; ++k) {
    const double shift = k - cfg.center_shift();
    const double dphase = kTwoPi * shift * s.dt / cfg.t_useful;
    fill_phase_ramp(ramp.data(), ramp.size(),
                    kTwoPi * shift * ((static_cast<double>(s.cp) + 0.5) * s.dt - cfg.t_cp) /
                        cfg.t_useful,
                    dphase);
    for (int l = 0; l < cfg.symbols; ++l) {
      const long long base = static_cast<long long>(l) * s.per_symbol + s.cp;
      y(l, k) = scale * ops.dotc(ramp.data(), rx.samples.data() + base, ramp.size());
    }
  }
  return y;
}

namespace {

cd rect_segment_integral(double a, double b, double nu, double t_symbol) {
  if (b <= a) return cd{};
  const double width = b - a;
  const double mag = (width / t_symbol) * sinc(std::numbers::pi * nu * width);
  return mag * std::polar(1.0, -std::numbers::pi * nu * (a + b));
}

}  // namespace

cd window_ambiguity(const OfdmConfig& cfg, const WaveformConfig& wcfg, double tau,
                    double nu) {
  (void)wcfg;  // rectangular window only
  const double a = std::max(cfg.t_cp, tau);
  const double b = std::min(cfg.t_symbol, cfg.t_symbol + tau);
  return rect_segment_integral(a, b, nu, cfg.t_symbol);
}

cd window_ambiguity_full(const OfdmConfig& cfg, double tau, double nu) {
  const double a = std::max(0.0, tau);
  const double b = std::min(cfg.t_symbol, cfg.t_symbol + tau);
  return rect_segment_integral(a, b, nu, cfg.t_symbol);
}

}  // namespace ofdmtap
