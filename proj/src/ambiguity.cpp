#include "ofdmtap/ambiguity.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include "ofdmtap/kernels.hpp"
#include "ofdmtap/rng.hpp"
#include "ofdmtap/signal_model.hpp"
#include "ofdmtap/waveform.hpp"

namespace ofdmtap {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

namespace {

// sin(n d/2) / sin(d/2) with the removable singularity expanded
double dirichlet_ratio(int n, double delta) {
  if (std::abs(delta) < 1e-9) {
    const double nn = static_cast<double>(n);
    return nn * (1.0 - (nn * nn - 1.0) * delta * delta / 24.0);
  }
  return std::sin(0.5 * n * delta) / std::sin(0.5 * delta);
}

}  // namespace

cd geometric_phase_sum(int n, double theta) {
  // Each term is 2*pi-periodic in theta, so reduce first; the reduced sum is
  // e^{j d (n-1)/2} * sin(n d/2) / sin(d/2).
  const double delta = theta - kTwoPi * std::round(theta / kTwoPi);
  return dirichlet_ratio(n, delta) * std::polar(1.0, 0.5 * delta * (n - 1));
}

cd centered_phase_sum(int n, double theta) {
  const double delta = theta - kTwoPi * std::round(theta / kTwoPi);
  const double phase = delta * (0.5 * (n - 1) - static_cast<double>(n / 2));
  return dirichlet_ratio(n, delta) * std::polar(1.0, phase);
}

cd ambiguity_exact(const OfdmConfig& cfg, const SymbolGrid& x, double tau, double nu) {
  cfg.validate();
  const int K = cfg.subcarriers, L = cfg.symbols;
  if (static_cast<long long>(K) * L > 4096) {
    throw std::invalid_argument("ambiguity_exact is reference-only; grid exceeds 4096 cells");
  }
  const double T = cfg.t_useful, Td = cfg.t_symbol, Tcp = cfg.t_cp;

  // Tables over symbol/subcarrier offsets; dk = k - k', dl = l' - l.
  std::vector<cd> cp_phase(2 * K - 1);  // e^{-j 2 pi dk Tcp / T}
  for (int dk = -(K - 1); dk <= K - 1; ++dk) {
    cp_phase[dk + K - 1] = std::polar(1.0, -kTwoPi * dk * Tcp / T);
  }
  std::vector<cd> tau_phase(K);  // e^{j 2 pi kp tau / T}, kp = k' - 1
  fill_phase_ramp(tau_phase.data(), K, 0.0, kTwoPi * tau / T);
  std::vector<cd> dop(L);  // e^{-j 2 pi Td l0 nu}
  fill_phase_ramp(dop.data(), L, 0.0, -kTwoPi * Td * nu);
  // e^{+j 2 pi Td l0 dk / T}
  std::vector<cd> cross(static_cast<std::size_t>(L) * (2 * K - 1));
  for (int dk = -(K - 1); dk <= K - 1; ++dk) {
    fill_phase_ramp(cross.data() + static_cast<std::size_t>(dk + K - 1) * L, L, 0.0,
                    kTwoPi * Td * dk / T);
  }
  std::vector<cd> win(static_cast<std::size_t>(2 * L - 1) * (2 * K - 1));
  for (int dl = -(L - 1); dl <= L - 1; ++dl) {
    for (int dk = -(K - 1); dk <= K - 1; ++dk) {
      win[static_cast<std::size_t>(dl + L - 1) * (2 * K - 1) + (dk + K - 1)] =
          window_ambiguity_full(cfg, tau + dl * Td, nu - static_cast<double>(dk) / T);
    }
  }

  cd acc{};
  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < K; ++k) {
      const cd xlk = x(l, k);
      if (xlk == cd{}) continue;
      for (int lp = 0; lp < L; ++lp) {
        const int dl = lp - l;
        for (int kp = 0; kp < K; ++kp) {
          const cd xpk = x(lp, kp);
          if (xpk == cd{}) continue;
          const int dk = k - kp;
          const cd w =
              win[static_cast<std::size_t>(dl + L - 1) * (2 * K - 1) + (dk + K - 1)];
          if (w == cd{}) continue;
          cd term = cmul(xlk, std::conj(xpk));
          term = cmul(term, cp_phase[dk + K - 1]);
          term = cmul(term, tau_phase[kp]);
          term = cmul(term, cmul(dop[l], cross[static_cast<std::size_t>(dk + K - 1) * L + l]));
          acc += cmul(term, w);
        }
      }
    }
  }
  const cd prefactor = std::polar(1.0, -kPi * K * tau / T);
  return cmul(prefactor, acc) / (static_cast<double>(K) * L);
}

cd ambiguity_approx(const OfdmConfig& cfg, const SymbolGrid& x, double tau, double nu) {
  const int K = cfg.subcarriers, L = cfg.symbols;
  std::vector<cd> ramp_l(L), ramp_k(K);
  fill_phase_ramp(ramp_l.data(), L, 0.0, -kTwoPi * nu * cfg.t_symbol);
  fill_delay_steering(cfg, tau, ramp_k.data());
  cd acc{};
  for (int k = 0; k < K; ++k) {
    const cd* xc = x.col(k);
    cd inner{};
    for (int l = 0; l < L; ++l) {
      inner += abs2(xc[l]) * ramp_l[l];
    }
    acc += cmul(ramp_k[k], inner);
  }
  return acc / (static_cast<double>(K) * L);
}

cd ambiguity_closed(const OfdmConfig& cfg, double tau, double nu) {
  const int K = cfg.subcarriers, L = cfg.symbols;
  const double theta_tau = kTwoPi * tau / cfg.t_useful;
  cd ksum = centered_phase_sum(K, theta_tau);
  for (int k1 : cfg.null_set) {
    ksum -= std::polar(1.0, theta_tau * (k1 - 1 - cfg.center_shift()));
  }
  const cd lsum = geometric_phase_sum(L, -kTwoPi * nu * cfg.t_symbol);
  return cmul(ksum, lsum) / (static_cast<double>(K) * L);
}

cd ambiguity_sinc(const OfdmConfig& cfg, double tau, double nu) {
  const double xt = kPi * cfg.subcarriers * tau / cfg.t_useful;
  const double xn = kPi * cfg.symbols * nu * cfg.t_symbol;
  return std::polar(1.0, -xt) * (sinc(xt) * sinc(xn));
}

cd ambiguity_sinc_null_dc(const OfdmConfig& cfg, double tau, double nu) {
  const double K = cfg.subcarriers;
  const double ratio = tau / cfg.t_useful;
  const double mag = std::cos(kPi * (K / 2.0 + 1.0) * ratio) * sinc(kPi * ratio * K / 2.0) *
                     sinc(kPi * nu * cfg.t_symbol * cfg.symbols);
  return std::polar(1.0, -kPi * K * ratio) * mag;
}

std::size_t AmbiguityCache::KeyHash::operator()(const Key& k) const {
  return static_cast<std::size_t>(mix64(k.tau_bits ^ mix64(k.nu_bits)));
}

cd AmbiguityCache::value(double dtau, double dnu) {
  const Key key{std::bit_cast<std::uint64_t>(dtau), std::bit_cast<std::uint64_t>(dnu)};
  auto it = map_.find(key);
  if (it != map_.end()) return it->second;
  const cd v = ambiguity_closed(cfg_, dtau, dnu);
  map_.emplace(key, v);
  return v;
}

std::vector<cd> gram_matrix(const OfdmConfig& cfg, std::span<const double> taus,
                            std::span<const double> nus, AmbiguityCache* cache) {
  if (taus.size() != nus.size() || taus.empty()) {
    throw std::invalid_argument("need matching, nonempty tau/nu lists");
  }
  const std::size_t p = taus.size();
  const double scale = static_cast<double>(cfg.subcarriers) * cfg.symbols;
  AmbiguityCache local(cfg);
  AmbiguityCache& c = cache != nullptr ? *cache : local;
  std::vector<cd> r(p * p);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = j; i < p; ++i) {
      const cd v = scale * c.value(taus[i] - taus[j], nus[j] - nus[i]);
      r[i + j * p] = v;
      r[j + i * p] = std::conj(v);
    }
  }
  return r;
}

std::vector<cd> correlation_vector(const OfdmConfig& cfg, const SymbolGrid& y,
                                   const SymbolGrid& x, std::span<const double> taus,
                                   std::span<const double> nus) {
  if (!y.same_shape(x)) throw std::invalid_argument("grid dimensions do not match");
  if (y.rows() != cfg.symbols || y.cols() != cfg.subcarriers) {
    throw std::invalid_argument("grid dimensions do not match config");
  }
  if (taus.size() != nus.size()) throw std::invalid_argument("tau/nu length mismatch");
  const auto& ops = kernels::active();
  SymbolGrid g(y.rows(), y.cols());
  ops.hadamard_conj(g.data(), y.data(), x.data(), g.size());
  std::vector<cd> psi(cfg.symbols), phi(cfg.subcarriers), row(cfg.subcarriers);
  std::vector<cd> w(taus.size());
  for (std::size_t i = 0; i < taus.size(); ++i) {
    fill_doppler_steering(cfg, nus[i], psi.data());
    fill_delay_steering(cfg, taus[i], phi.data());
    for (int k = 0; k < cfg.subcarriers; ++k) {
      row[k] = ops.dotc(psi.data(), g.col(k), psi.size());
    }
    w[i] = ops.dotu(row.data(), phi.data(), row.size());
  }
  return w;
}

void AmbiguityGrid::validate() const {
  if (values.size() != tau_axis.size() * nu_axis.size()) {
    throw std::invalid_argument("ambiguity grid shape mismatch");
  }
  for (const cd& v : values) {
    if (std::abs(v) > 1.0 + 1e-9) {
      throw std::invalid_argument("ambiguity magnitude exceeds 1");
    }
  }
}

AmbiguityGrid sample_ambiguity(const OfdmConfig& cfg, std::span<const double> taus,
                               std::span<const double> nus) {
  AmbiguityGrid g;
  g.tau_axis.assign(taus.begin(), taus.end());
  g.nu_axis.assign(nus.begin(), nus.end());
  g.values.resize(taus.size() * nus.size());
  for (std::size_t ti = 0; ti < taus.size(); ++ti) {
    for (std::size_t ni = 0; ni < nus.size(); ++ni) {
      g.values[ti * nus.size() + ni] = ambiguity_closed(cfg, taus[ti], nus[ni]);
    }
  }
  g.validate();
  return g;
}

}  // namespace ofdmtap
