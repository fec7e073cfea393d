#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ofdmtap/ambiguity.hpp"
#include "ofdmtap/estimator.hpp"
#include "ofdmtap/kernels.hpp"
#include "ofdmtap/signal_model.hpp"
#include "test_support.hpp"

using namespace ofdmtap;
namespace ts = test_support;

namespace {

OfdmConfig cfg_ratio(int symbols, int subcarriers) {
  return {subcarriers, symbols, 6.4e-6, 8.0e-6, 1.6e-6, {}};
}

SearchRegion vehicular_region() {
  SearchRegion r;
  r.tau_min = 0.0;
  r.tau_max = 200e-9;
  r.nu_min = -500.0;
  r.nu_max = 500.0;
  return r;
}

SymbolGrid noiseless_rx(const OfdmConfig& cfg, const SymbolGrid& x,
                        const MultipathChannel& chan) {
  return apply_channel(x, channel_coeffs(cfg, chan), NoiseSpec::noiseless());
}

double final_spacing(double span, const SearchRegion& r, int bins_axis) {
  // spacing after the full iteration budget with untruncated shrink windows
  double spacing = span / bins_axis;
  for (int i = 2; i <= r.max_iterations; ++i) {
    spacing = 2.0 * r.shrink * spacing / bins_axis;
  }
  return spacing;
}

}  // namespace

TEST_CASE("option validation") {
  SearchRegion r = vehicular_region();
  CHECK_NOTHROW(r.validate());
  r.shrink = 0.4;
  CHECK_THROWS(r.validate());
  r = vehicular_region();
  r.delay_bins = 2;
  CHECK_THROWS(r.validate());
  r = vehicular_region();
  r.tau_max = r.tau_min;
  CHECK_THROWS(r.validate());

  EstimatorOptions o;
  CHECK_NOTHROW(o.validate());
  o.num_taps = 0;
  CHECK_THROWS(o.validate());
  o = {};
  o.min_amplitude = -1.0;
  CHECK_THROWS(o.validate());
}

TEST_CASE("periodogram point") {
  const OfdmConfig cfg = cfg_ratio(8, 8);
  const SymbolGrid x = ts::random_psk_grid(cfg, 12);
  SUBCASE("zero grid") {
    const SymbolGrid zero(cfg.symbols, cfg.subcarriers);
    CHECK(std::abs(periodogram_point(cfg, zero, x, 40e-9, 100.0)) == 0.0);
  }
  SUBCASE("coherent combining at the true parameters") {
    const OfdmConfig ones_cfg = cfg;
    const SymbolGrid ones = generate_symbols(ones_cfg, {Constellation::AllOnes}, 0);
    MultipathChannel chan;
    chan.taps = {{cd{0.4, 0.7}, 110e-9, -260.0}};
    const SymbolGrid y = noiseless_rx(ones_cfg, ones, chan);
    const cd v = periodogram_point(ones_cfg, y, ones, 110e-9, -260.0);
    CHECK(std::abs(v - 64.0 * chan.taps[0].gain) < 1e-9);
  }
  SUBCASE("offset response is the scaled ambiguity") {
    MultipathChannel chan;
    chan.taps = {{cd{-0.3, 0.9}, 70e-9, 140.0}};
    const SymbolGrid y = noiseless_rx(cfg, x, chan);
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 25; ++rep) {
      const double tau = 70e-9 + u(rng) * 120e-9;
      const double nu = 140.0 + u(rng) * 700.0;
      const cd expect = 64.0 * chan.taps[0].gain *
                        ambiguity_approx(cfg, x, tau - 70e-9, 140.0 - nu);
      CHECK(std::abs(periodogram_point(cfg, y, x, tau, nu) - expect) <= 1e-9 * 64.0);
    }
  }
  SUBCASE("zero-forcing domain skips the symbol product") {
    MultipathChannel chan;
    chan.taps = {{cd{0.8, -0.1}, 90e-9, 310.0}};
    const SymbolGrid y = noiseless_rx(cfg, x, chan);
    SymbolGrid h_hat(cfg.symbols, cfg.subcarriers);
    kernels::active().hadamard_conj(h_hat.data(), y.data(), x.data(), y.size());
    const cd a = periodogram_point(cfg, y, x, 95e-9, 290.0);
    const cd b = periodogram_point(cfg, h_hat, x, 95e-9, 290.0, EstimatorDomain::ZeroForcingH);
    CHECK(std::abs(a - b) < 1e-9);
  }
}

TEST_CASE("bisection peak search") {
  const OfdmConfig cfg = cfg_ratio(32, 16);
  const SymbolGrid ones = generate_symbols(cfg, {Constellation::AllOnes}, 0);
  SUBCASE("noiseless tap localized to the final spacing") {
    SearchRegion r = vehicular_region();
    r.eps_tau = 0.0;
    r.eps_nu = 0.0;
    MultipathChannel chan;
    chan.taps = {{cd{1.0, 0.2}, 87.3e-9, -123.4}};
    const SymbolGrid y = noiseless_rx(cfg, ones, chan);
    const PeakResult pk = bisection_peak(cfg, y, ones, r);
    // the discrete argmax walk can land one bin past the ideal cell
    CHECK(std::abs(pk.tau - 87.3e-9) <= 2.0 * final_spacing(200e-9, r, r.delay_bins));
    CHECK(std::abs(pk.nu - -123.4) <= 2.0 * final_spacing(1000.0, r, r.doppler_bins));
    CHECK(std::abs(pk.corr) == doctest::Approx(512.0 * std::abs(chan.taps[0].gain)).epsilon(1e-4));
  }
  SUBCASE("tap at the region corner") {
    SearchRegion r = vehicular_region();
    r.eps_tau = 0.0;
    r.eps_nu = 0.0;
    MultipathChannel chan;
    chan.taps = {{cd{1.0, 0.0}, 200e-9, 500.0}};
    const SymbolGrid y = noiseless_rx(cfg, ones, chan);
    const PeakResult pk = bisection_peak(cfg, y, ones, r);
    CHECK(std::abs(pk.tau - 200e-9) <= 2.0 * final_spacing(200e-9, r, r.delay_bins));
    CHECK(std::abs(pk.nu - 500.0) <= 2.0 * final_spacing(1000.0, r, r.doppler_bins));
  }
  SUBCASE("constant grid peaks at the origin") {
    SearchRegion r;
    r.tau_min = -50e-9;
    r.tau_max = 150e-9;
    r.nu_min = -400.0;
    r.nu_max = 400.0;
    r.eps_tau = 0.0;
    r.eps_nu = 0.0;
    MultipathChannel chan;
    chan.taps = {{cd{1.0, 0.0}, 0.0, 0.0}};
    const SymbolGrid y = noiseless_rx(cfg, ones, chan);
    const PeakResult pk = bisection_peak(cfg, y, ones, r);
    CHECK(std::abs(pk.tau) <= final_spacing(200e-9, r, r.delay_bins));
    CHECK(std::abs(pk.nu) <= final_spacing(800.0, r, r.doppler_bins));
  }
  SUBCASE("flat input resolves ties toward the lowest indices") {
    const SymbolGrid zero(cfg.symbols, cfg.subcarriers);
    SearchRegion r = vehicular_region();
    const PeakResult a = bisection_peak(cfg, zero, ones, r);
    const PeakResult b = bisection_peak(cfg, zero, ones, r);
    CHECK(a.tau == b.tau);
    CHECK(a.nu == b.nu);
    CHECK(a.tau == doctest::Approx(r.tau_min));
    CHECK(a.nu == doctest::Approx(r.nu_min));
  }
  SUBCASE("wide regions densify the first grid") {
    SearchRegion r = vehicular_region();
    r.nu_min = -4000.0;
    r.nu_max = 4000.0;
    r.doppler_bins = 3;
    r.delay_bins = 3;
    MultipathChannel chan;
    chan.taps = {{cd{1.0, 0.0}, 120e-9, 2400.0}};
    const SymbolGrid y = noiseless_rx(cfg, ones, chan);
    const PeakResult pk = bisection_peak(cfg, y, ones, r);
    CHECK(pk.densified);
    // three bins shrink slowly (factor 2/3 per iteration)
    CHECK(std::abs(pk.tau - 120e-9) < 4e-9);
    CHECK(std::abs(pk.nu - 2400.0) < 50.0);
  }
}

TEST_CASE("amplitude solve") {
  const OfdmConfig cfg = cfg_ratio(16, 8);
  const SymbolGrid ones = generate_symbols(cfg, {Constellation::AllOnes}, 0);
  SUBCASE("single tap divides by the cell count") {
    MultipathChannel chan;
    chan.taps = {{cd{0.3, -0.6}, 60e-9, 220.0}};
    const SymbolGrid y = noiseless_rx(cfg, ones, chan);
    const std::vector<double> taus = {60e-9};
    const std::vector<double> nus = {220.0};
    const auto r = gram_matrix(cfg, taus, nus);
    const auto w = correlation_vector(cfg, y, ones, taus, nus);
    const auto a = ls_amplitudes(r, w);
    CHECK(std::abs(a[0] - w[0] / 128.0) < 1e-12);
    CHECK(std::abs(a[0] - chan.taps[0].gain) < 1e-9);
  }
  SUBCASE("two well-separated taps recovered exactly") {
    MultipathChannel chan;
    chan.taps = {{cd{1.0, 0.1}, 30e-9, -310.0}, {cd{0.2, -0.4}, 160e-9, 260.0}};
    const SymbolGrid y = noiseless_rx(cfg, ones, chan);
    const std::vector<double> taus = {30e-9, 160e-9};
    const std::vector<double> nus = {-310.0, 260.0};
    const auto a = ls_amplitudes(gram_matrix(cfg, taus, nus),
                                 correlation_vector(cfg, y, ones, taus, nus));
    CHECK(std::abs(a[0] - chan.taps[0].gain) < 1e-9);
    CHECK(std::abs(a[1] - chan.taps[1].gain) < 1e-9);
  }
  SUBCASE("zero correlation gives zero amplitudes") {
    const std::vector<double> taus = {30e-9, 160e-9};
    const std::vector<double> nus = {-310.0, 260.0};
    const std::vector<cd> w = {cd{}, cd{}};
    const auto a = ls_amplitudes(gram_matrix(cfg, taus, nus), w);
    CHECK(std::abs(a[0]) == 0.0);
    CHECK(std::abs(a[1]) == 0.0);
  }
  SUBCASE("coincident taps are flagged with the offending pair") {
    const std::vector<double> taus = {60e-9, 60e-9};
    const std::vector<double> nus = {220.0, 220.0};
    const std::vector<cd> w = {cd{1.0, 0.0}, cd{1.0, 0.0}};
    try {
      ls_amplitudes(gram_matrix(cfg, taus, nus), w);
      FAIL("expected CollidingTapsError");
    } catch (const CollidingTapsError& e) {
      CHECK(e.tap_i == 0);
      CHECK(e.tap_j == 1);
    }
  }
}

TEST_CASE("successive cancellation") {
  SUBCASE("single noiseless tap") {
    const OfdmConfig cfg = cfg_ratio(32, 16);
    const SymbolGrid ones = generate_symbols(cfg, {Constellation::AllOnes}, 0);
    MultipathChannel chan;
    chan.taps = {{cd{0.9, -0.35}, 87.3e-9, -123.4}};
    const SymbolGrid y = noiseless_rx(cfg, ones, chan);
    EstimatorOptions opts;
    opts.num_taps = 1;
    const EstimateSet est = initial_estimate(cfg, y, ones, opts, vehicular_region());
    REQUIRE(est.taps.size() == 1);
    CHECK(std::abs(est.taps[0].delay - 87.3e-9) < 1e-12);
    CHECK(std::abs(est.taps[0].doppler - -123.4) < 1e-2);
    CHECK(std::abs(est.taps[0].gain - chan.taps[0].gain) <=
          1e-6 * std::abs(chan.taps[0].gain));
    REQUIRE(est.residual_trace.size() == 2);
    CHECK(est.residual_trace[1] < 1e-9 * est.residual_trace[0]);
  }
  SUBCASE("exact cancellation when the tap sits on the search lattice") {
    const OfdmConfig cfg = cfg_ratio(16, 8);
    const SymbolGrid ones = generate_symbols(cfg, {Constellation::AllOnes}, 0);
    SearchRegion r = vehicular_region();
    r.eps_tau = 0.0;
    r.eps_nu = 0.0;
    // iteration-1 grid point: recentered windows keep hitting it exactly
    MultipathChannel chan;
    chan.taps = {{cd{0.6, 0.2}, 200e-9 * 5.0 / 16.0, -500.0 + 1000.0 * 11.0 / 16.0}};
    const SymbolGrid y = noiseless_rx(cfg, ones, chan);
    EstimatorOptions opts;
    opts.num_taps = 1;
    const EstimateSet est = initial_estimate(cfg, y, ones, opts, r);
    CHECK(est.taps[0].delay == doctest::Approx(chan.taps[0].delay).epsilon(1e-12));
    CHECK(est.taps[0].doppler == doctest::Approx(chan.taps[0].doppler).epsilon(1e-12));
    // reconstruction from exact parameters cancels the observation to rounding
    CHECK(est.residual_trace[1] <= 1e-12 * est.residual_trace[0]);
  }
  SUBCASE("three-tap vehicular profile, noiseless") {
    const OfdmConfig cfg = OfdmConfig::ieee80211(128);
    const SymbolGrid ones = generate_symbols(cfg, {Constellation::AllOnes}, 0);
    MultipathChannel chan;
    chan.taps = {{std::polar(1.0, 0.7), 20e-9, -400.0},
                 {std::polar(std::pow(10.0, -0.5), -1.9), 100e-9, 50.0},
                 {std::polar(0.1, 2.4), 180e-9, 450.0}};
    const SymbolGrid y = noiseless_rx(cfg, ones, chan);
    EstimatorOptions opts;
    opts.num_taps = 3;
    const EstimateSet est = initial_estimate(cfg, y, ones, opts, vehicular_region());
    REQUIRE(est.taps.size() == 3);
    // detected strongest to weakest
    CHECK(std::abs(est.taps[0].gain) >= std::abs(est.taps[1].gain));
    CHECK(std::abs(est.taps[1].gain) >= std::abs(est.taps[2].gain));
    // successive cancellation alone is interference-limited: expect every
    // true tap matched within a quarter resolution cell, not to precision
    const double tau_cell = cfg.t_useful / cfg.subcarriers;
    const double nu_cell = 1.0 / (cfg.symbols * cfg.t_symbol);
    for (const ChannelTap& truth : chan.taps) {
      double best_tau = 1e9, best_nu = 1e9, best = 1e18;
      for (const TapEstimate& e : est.taps) {
        const double d = std::hypot((e.delay - truth.delay) / tau_cell,
                                    (e.doppler - truth.doppler) / nu_cell);
        if (d < best) {
          best = d;
          best_tau = std::abs(e.delay - truth.delay);
          best_nu = std::abs(e.doppler - truth.doppler);
        }
      }
      CHECK(best_tau < 0.25 * tau_cell);
      CHECK(best_nu < 0.25 * nu_cell);
    }
    // residual decreases monotonically through the cancellation stages
    for (std::size_t i = 1; i < est.residual_trace.size(); ++i) {
      CHECK(est.residual_trace[i] <=
            est.residual_trace[i - 1] + 1e-9 * est.residual_trace[0]);
    }
    // run the parallel-cancellation sweeps to convergence: the noiseless
    // fixed point is the true channel
    opts.refine_iterations = 400;
    opts.early_stop_tol = 1e-13;
    const EstimateSet ref = refine(cfg, y, ones, est, opts, vehicular_region());
    for (const ChannelTap& truth : chan.taps) {
      double best = 1e18;
      const TapEstimate* match = nullptr;
      for (const TapEstimate& e : ref.taps) {
        const double d = std::hypot((e.delay - truth.delay) / tau_cell,
                                    (e.doppler - truth.doppler) / nu_cell);
        if (d < best) {
          best = d;
          match = &e;
        }
      }
      REQUIRE(match != nullptr);
      CHECK(std::abs(match->delay - truth.delay) < 0.5e-9);
      CHECK(std::abs(match->doppler - truth.doppler) < 0.5);
      CHECK(std::abs(match->gain - truth.gain) < 1e-3 * std::abs(truth.gain));
    }
  }
  SUBCASE("amplitude threshold stops the recursion") {
    const OfdmConfig cfg = OfdmConfig::ieee80211(128);
    const SymbolGrid ones = generate_symbols(cfg, {Constellation::AllOnes}, 0);
    MultipathChannel chan;
    chan.taps = {{std::polar(1.0, 0.7), 20e-9, -400.0},
                 {std::polar(std::pow(10.0, -0.5), -1.9), 100e-9, 50.0},
                 {std::polar(0.1, 2.4), 180e-9, 450.0}};
    const SymbolGrid y = noiseless_rx(cfg, ones, chan);
    EstimatorOptions opts;
    opts.num_taps = 3;
    opts.min_amplitude = 0.15;  // between the -10 dB and -20 dB magnitudes
    const EstimateSet est = initial_estimate(cfg, y, ones, opts, vehicular_region());
    CHECK(est.taps.size() == 2);
  }
  SUBCASE("matched and zero-forcing domains agree for unit-modulus symbols") {
    const OfdmConfig cfg = cfg_ratio(16, 8);
    const SymbolGrid psk = ts::random_psk_grid(cfg, 31);
    MultipathChannel chan;
    chan.taps = {{cd{0.7, 0.4}, 140e-9, -90.0}};
    const SymbolGrid y =
        apply_channel(psk, channel_coeffs(cfg, chan), NoiseSpec::from_snr_linear(cfg, 1000.0, 8));
    EstimatorOptions opts;
    opts.num_taps = 1;
    const EstimateSet a = initial_estimate(cfg, y, psk, opts, vehicular_region());
    opts.domain = EstimatorDomain::ZeroForcingH;
    const EstimateSet b = initial_estimate(cfg, y, psk, opts, vehicular_region());
    CHECK(std::abs(a.taps[0].delay - b.taps[0].delay) < 1e-15);
    CHECK(std::abs(a.taps[0].doppler - b.taps[0].doppler) < 1e-12);
    CHECK(std::abs(a.taps[0].gain - b.taps[0].gain) < 1e-9);
  }
  SUBCASE("gram validation path matches the closed form") {
    const OfdmConfig cfg = cfg_ratio(8, 8);
    const SymbolGrid ones = generate_symbols(cfg, {Constellation::AllOnes}, 0);
    MultipathChannel chan;
    chan.taps = {{cd{1.0, 0.0}, 50e-9, 210.0}, {cd{0.4, 0.3}, 170e-9, -380.0}};
    const SymbolGrid y = noiseless_rx(cfg, ones, chan);
    EstimatorOptions opts;
    opts.num_taps = 2;
    const EstimateSet fast = initial_estimate(cfg, y, ones, opts, vehicular_region());
    opts.validate_gram = true;
    const EstimateSet slow = initial_estimate(cfg, y, ones, opts, vehicular_region());
    REQUIRE(fast.taps.size() == slow.taps.size());
    for (std::size_t i = 0; i < fast.taps.size(); ++i) {
      CHECK(std::abs(fast.taps[i].gain - slow.taps[i].gain) < 1e-9);
      CHECK(fast.taps[i].delay == slow.taps[i].delay);
      CHECK(fast.taps[i].doppler == slow.taps[i].doppler);
    }
  }
}

TEST_CASE("single-tap search equals a full-grid periodogram scan") {
  const OfdmConfig cfg = cfg_ratio(8, 8);
  const SymbolGrid ones = generate_symbols(cfg, {Constellation::AllOnes}, 0);
  SearchRegion r;
  r.tau_min = 0.0;
  r.tau_max = 0.5 * cfg.t_useful / cfg.subcarriers * 8.0;  // 4 delay lobes
  r.nu_min = -2.0 / (cfg.symbols * cfg.t_symbol);
  r.nu_max = 2.0 / (cfg.symbols * cfg.t_symbol);
  r.delay_bins = 4;
  r.doppler_bins = 4;
  r.max_iterations = 4;
  r.shrink = 1.0;
  r.eps_tau = 0.0;
  r.eps_nu = 0.0;

  MultipathChannel chan;
  chan.taps = {{std::polar(1.0, 1.1), 0.43 * r.tau_max, 0.31 * r.nu_max}};
  const SymbolGrid h = channel_coeffs(cfg, chan);
  const SymbolGrid y = apply_channel(ones, h, NoiseSpec::from_snr_linear(cfg, 100.0, 17));

  const PeakResult pk = bisection_peak(cfg, y, ones, r);

  // nested windows with shrink 1 and even bin counts stay on the lattice of
  // the final spacing, so an exhaustive scan at that spacing is comparable
  const double dtau = final_spacing(r.tau_max - r.tau_min, r, 4);
  const double dnu = final_spacing(r.nu_max - r.nu_min, r, 4);
  double best = -1.0, bt = 0.0, bn = 0.0;
  for (int ni = 0; ni * dnu + r.nu_min < r.nu_max; ++ni) {
    for (int ti = 0; ti * dtau + r.tau_min < r.tau_max; ++ti) {
      const double tau = r.tau_min + ti * dtau;
      const double nu = r.nu_min + ni * dnu;
      const double v = abs2(periodogram_point(cfg, y, ones, tau, nu));
      if (v > best) {
        best = v;
        bt = tau;
        bn = nu;
      }
    }
  }
  CHECK(std::abs(pk.tau - bt) <= 0.51 * dtau);
  CHECK(std::abs(pk.nu - bn) <= 0.51 * dnu);
}

TEST_CASE("noise-only input produces no phantom coherence") {
  const OfdmConfig cfg = cfg_ratio(16, 8);
  const SymbolGrid ones = generate_symbols(cfg, {Constellation::AllOnes}, 0);
  const SymbolGrid zero_h(cfg.symbols, cfg.subcarriers);
  SearchRegion r;
  r.tau_min = 0.0;
  r.tau_max = cfg.t_useful / cfg.subcarriers;  // one delay cell
  r.nu_min = -0.5 / (cfg.symbols * cfg.t_symbol);
  r.nu_max = 0.5 / (cfg.symbols * cfg.t_symbol);
  const double sigma2 = 8.0;
  std::vector<double> ratios;
  for (unsigned seed = 0; seed < 41; ++seed) {
    NoiseSpec n;
    n.sigma2 = sigma2;
    n.seed = 9000 + seed;
    const SymbolGrid y = apply_channel(ones, zero_h, n);
    const PeakResult pk = bisection_peak(cfg, y, ones, r);
    ratios.push_back(abs2(pk.corr) / (128.0 * sigma2));
  }
  std::sort(ratios.begin(), ratios.end());
  const double median = ratios[ratios.size() / 2];
  CHECK(median > 1.0 / 3.0);
  CHECK(median < 3.0);
}

TEST_CASE("refinement") {
  const OfdmConfig cfg = cfg_ratio(32, 16);
  const SymbolGrid ones = generate_symbols(cfg, {Constellation::AllOnes}, 0);
  MultipathChannel chan;
  chan.taps = {{std::polar(1.0, 0.4), 40e-9, -300.0},
               {std::polar(0.4, -1.2), 150e-9, 350.0}};
  const SymbolGrid y = noiseless_rx(cfg, ones, chan);

  SUBCASE("zero sweeps is the identity") {
    EstimatorOptions opts;
    opts.num_taps = 2;
    const EstimateSet init = initial_estimate(cfg, y, ones, opts, vehicular_region());
    opts.refine_iterations = 0;
    const EstimateSet out = refine(cfg, y, ones, init, opts, vehicular_region());
    CHECK(out.refine_iters_used == 0);
    REQUIRE(out.taps.size() == init.taps.size());
    for (std::size_t i = 0; i < init.taps.size(); ++i) {
      CHECK(out.taps[i].delay == init.taps[i].delay);
      CHECK(out.taps[i].doppler == init.taps[i].doppler);
      CHECK(out.taps[i].gain == init.taps[i].gain);
    }
  }
  SUBCASE("perturbed estimates contract toward the truth") {
    // start from parameters pushed half a resolution cell off
    EstimateSet seed;
    const double dtau_cell = 0.5 * cfg.t_useful / cfg.subcarriers / 8.0;
    const double dnu_cell = 0.5 / (cfg.symbols * cfg.t_symbol) / 8.0;
    std::vector<double> taus, nus;
    for (const ChannelTap& t : chan.taps) {
      taus.push_back(t.delay + dtau_cell);
      nus.push_back(t.doppler - dnu_cell);
    }
    const auto amps = ls_amplitudes(gram_matrix(cfg, taus, nus),
                                    correlation_vector(cfg, y, ones, taus, nus));
    for (std::size_t i = 0; i < taus.size(); ++i) {
      seed.taps.push_back({amps[i], taus[i], nus[i]});
    }
    EstimatorOptions opts;
    opts.num_taps = 2;
    opts.refine_iterations = 3;
    const EstimateSet out = refine(cfg, y, ones, seed, opts, vehicular_region());
    CHECK(out.refine_iters_used == 3);
    for (std::size_t i = 0; i < chan.taps.size(); ++i) {
      const double before = std::abs(seed.taps[i].delay - chan.taps[i].delay);
      const double after = std::abs(out.taps[i].delay - chan.taps[i].delay);
      CHECK(after < before);
      const double nbefore = std::abs(seed.taps[i].doppler - chan.taps[i].doppler);
      const double nafter = std::abs(out.taps[i].doppler - chan.taps[i].doppler);
      CHECK(nafter < nbefore);
    }
  }
  SUBCASE("early stop keeps the best-residual iterate") {
    const SymbolGrid noisy =
        apply_channel(ones, channel_coeffs(cfg, chan), NoiseSpec::from_snr_linear(cfg, 31.6, 5));
    EstimatorOptions opts;
    opts.num_taps = 2;
    const EstimateSet init = initial_estimate(cfg, noisy, ones, opts, vehicular_region());
    opts.refine_iterations = 6;
    opts.early_stop_tol = 1e-4;
    const EstimateSet out = refine(cfg, noisy, ones, init, opts, vehicular_region());
    // compare full-reconstruction residuals of input and output tap sets
    const auto resid = [&](const EstimateSet& e) {
      MultipathChannel c;
      for (const TapEstimate& t : e.taps) c.taps.push_back({t.gain, t.delay, t.doppler});
      const SymbolGrid rec = noiseless_rx(cfg, ones, c);
      double num = 0.0;
      for (int k = 0; k < cfg.subcarriers; ++k) {
        for (int l = 0; l < cfg.symbols; ++l) num += abs2(noisy(l, k) - rec(l, k));
      }
      return num;
    };
    CHECK(resid(out) <= resid(init) * (1.0 + 1e-12));
  }
}

TEST_CASE("single-tap variance floors") {
  const OfdmConfig cfg = OfdmConfig::ieee80211(512);
  SUBCASE("frozen values") {
    const CrlbBounds b = crlb_single_tap(cfg, 52.0, 1.0);  // sigma2/|a|^2 = 52
    CHECK(std::sqrt(b.var_tau_over_t) * cfg.t_useful ==
          doctest::Approx(2.121e-9).epsilon(1e-3));
    CHECK(std::sqrt(b.var_nu_td) / cfg.t_symbol == doctest::Approx(4.206).epsilon(1e-3));
  }
  SUBCASE("scales inversely with tap power") {
    const CrlbBounds b1 = crlb_single_tap(cfg, 1.0, 1.0);
    const CrlbBounds b2 = crlb_single_tap(cfg, 1.0, 2.0);
    CHECK(b1.var_nu_td == doctest::Approx(2.0 * b2.var_nu_td).epsilon(1e-12));
    CHECK(b1.var_tau_over_t == doctest::Approx(2.0 * b2.var_tau_over_t).epsilon(1e-12));
  }
  SUBCASE("swapping the grid dimensions swaps the bounds") {
    OfdmConfig a = cfg_ratio(64, 16);
    OfdmConfig b = cfg_ratio(16, 64);
    const CrlbBounds ba = crlb_single_tap(a, 3.0, 0.5);
    const CrlbBounds bb = crlb_single_tap(b, 3.0, 0.5);
    CHECK(ba.var_nu_td == doctest::Approx(bb.var_tau_over_t).epsilon(1e-12));
    CHECK(ba.var_tau_over_t == doctest::Approx(bb.var_nu_td).epsilon(1e-12));
  }
  SUBCASE("rejects degenerate inputs") {
    CHECK_THROWS(crlb_single_tap(cfg, 1.0, 0.0));
  }
}
