#include "ofdmtap/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

#include "ofdmtap/rng.hpp"
#include "ofdmtap/signal_model.hpp"

namespace ofdmtap {

void ScenarioSpec::validate() const {
  if (num_taps < 1) throw std::invalid_argument("num_taps must be >= 1");
  if (static_cast<int>(pdp_db.size()) != num_taps) {
    throw std::invalid_argument("pdp_db must have one entry per tap");
  }
  if (!(tau_min < tau_max) || !(nu_min < nu_max)) {
    throw std::invalid_argument("tau/nu ranges must be nonempty");
  }
  if (min_delay_gap < 0.0 || min_doppler_gap < 0.0) {
    throw std::invalid_argument("separations must be >= 0");
  }
  if (min_delay_gap > (tau_max - tau_min) / num_taps ||
      min_doppler_gap > (nu_max - nu_min) / num_taps) {
    throw std::invalid_argument("separation exceeds range/num_taps; sampling infeasible");
  }
  if (trials < 0) throw std::invalid_argument("trials must be >= 0");
}

ScenarioSpec ScenarioSpec::vehicular(int trials, std::uint64_t seed) {
  ScenarioSpec s;
  s.num_taps = 3;
  s.pdp_db = {0.0, -10.0, -20.0};
  s.tau_min = 0.0;
  s.tau_max = 200e-9;
  s.nu_min = -500.0;
  s.nu_max = 500.0;
  s.min_delay_gap = 200e-9 / 3.0;
  s.min_doppler_gap = 1000.0 / 3.0;
  s.snr_grid_db = {0, 5, 10, 15, 20, 25, 30, 35, 40};
  s.trials = trials;
  s.seed = seed;
  return s;
}

namespace {

constexpr int kRejectionBudget = 100000;

// Repeated i.i.d. uniform draws of a whole vector until the minimum pairwise
// gap is met.
std::vector<double> draw_separated(Rng& rng, int n, double lo, double hi, double gap) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n), sorted(n);
  for (int attempt = 0; attempt < kRejectionBudget; ++attempt) {
    for (double& x : v) x = u(rng);
    sorted = v;
    std::sort(sorted.begin(), sorted.end());
    bool ok = true;
    for (int i = 0; i + 1 < n; ++i) {
      if (sorted[i + 1] - sorted[i] <= gap) {
        ok = false;
        break;
      }
    }
    if (ok) return v;
  }
  throw std::runtime_error("tap sampling: separation constraint infeasible within budget");
}

}  // namespace

MultipathChannel sample_taps(const ScenarioSpec& spec, std::uint64_t trial_seed) {
  spec.validate();
  Rng rng(trial_seed);
  std::vector<double> delays =
      draw_separated(rng, spec.num_taps, spec.tau_min, spec.tau_max, spec.min_delay_gap);
  std::sort(delays.begin(), delays.end());
  const std::vector<double> dopplers =
      draw_separated(rng, spec.num_taps, spec.nu_min, spec.nu_max, spec.min_doppler_gap);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  MultipathChannel chan;
  chan.taps.resize(spec.num_taps);
  for (int p = 0; p < spec.num_taps; ++p) {
    const double mag = std::pow(10.0, spec.pdp_db[p] / 20.0);
    chan.taps[p] = {std::polar(mag, phase(rng)), delays[p], dopplers[p]};
  }
  return chan;
}

TapMatch match_estimates(const OfdmConfig& cfg, const MultipathChannel& truth,
                         const EstimateSet& est) {
  const double tau_cell = cfg.t_useful / cfg.subcarriers;
  const double nu_cell = 1.0 / (cfg.symbols * cfg.t_symbol);
  const int p = truth.size();
  TapMatch m;
  m.estimate_for_tap.assign(p, -1);
  m.distance.assign(p, 0.0);
  if (static_cast<int>(est.taps.size()) != p) {
    m.miss = true;
    return m;
  }
  std::vector<int> claims(est.taps.size(), 0);
  for (int i = 0; i < p; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = -1;
    for (std::size_t j = 0; j < est.taps.size(); ++j) {
      const double dt = (truth.taps[i].delay - est.taps[j].delay) / tau_cell;
      const double dn = (truth.taps[i].doppler - est.taps[j].doppler) / nu_cell;
      const double d2 = dt * dt + dn * dn;
      if (d2 < best) {
        best = d2;
        arg = static_cast<int>(j);
      }
    }
    m.estimate_for_tap[i] = arg;
    m.distance[i] = std::sqrt(best);
    claims[arg] += 1;
  }
  for (int c : claims) {
    if (c != 1) {
      m.miss = true;
      break;
    }
  }
  return m;
}

namespace {

struct StageRecord {
  bool miss = true;
  // squared errors per true tap; valid only when !miss
  std::vector<double> dtau2, dnu2, dgain2;
};

struct TrialRecord {
  bool error = false;
  StageRecord initial, refined;
};

void fill_stage(const OfdmConfig& cfg, const MultipathChannel& truth,
                const EstimateSet& est, StageRecord& out) {
  const TapMatch m = match_estimates(cfg, truth, est);
  out.miss = m.miss;
  if (m.miss) return;
  const int p = truth.size();
  out.dtau2.resize(p);
  out.dnu2.resize(p);
  out.dgain2.resize(p);
  for (int i = 0; i < p; ++i) {
    const TapEstimate& e = est.taps[m.estimate_for_tap[i]];
    const double dt = e.delay - truth.taps[i].delay;
    const double dn = e.doppler - truth.taps[i].doppler;
    out.dtau2[i] = dt * dt;
    out.dnu2[i] = dn * dn;
    out.dgain2[i] = abs2(e.gain - truth.taps[i].gain);
  }
}

std::vector<TapErrorStats> reduce_stage(const std::vector<TrialRecord>& records,
                                        bool refined, int p, int* misses) {
  std::vector<double> st(p, 0.0), sn(p, 0.0), sg(p, 0.0);
  int detected = 0;
  *misses = 0;
  for (const TrialRecord& r : records) {
    const StageRecord& s = refined ? r.refined : r.initial;
    if (s.miss) {
      ++*misses;
      continue;
    }
    ++detected;
    for (int i = 0; i < p; ++i) {
      st[i] += s.dtau2[i];
      sn[i] += s.dnu2[i];
      sg[i] += s.dgain2[i];
    }
  }
  std::vector<TapErrorStats> out(p);
  for (int i = 0; i < p; ++i) {
    if (detected > 0) {
      out[i].rms_tau = std::sqrt(st[i] / detected);
      out[i].rms_nu = std::sqrt(sn[i] / detected);
      out[i].rms_gain = std::sqrt(sg[i] / detected);
    }
  }
  return out;
}

}  // namespace

TrialStats run_trials(const OfdmConfig& cfg, const ScenarioSpec& spec,
                      const EstimatorOptions& opts, const SearchRegion& region,
                      const RunOptions& run) {
  cfg.validate();
  spec.validate();
  opts.validate();
  region.validate();
  const SymbolGrid x = generate_symbols(cfg, {Constellation::AllOnes}, 0);

  int threads = run.threads;
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
  }

  TrialStats stats;
  for (std::size_t si = 0; si < spec.snr_grid_db.size(); ++si) {
    const double snr_db = spec.snr_grid_db[si];
    const double sigma2 = NoiseSpec::from_snr_db(cfg, snr_db, 0).sigma2;

    std::vector<TrialRecord> records(spec.trials);
    const auto worker = [&](int first) {
      for (int t = first; t < spec.trials; t += threads) {
        const std::uint64_t ts = trial_seed(spec.seed, si, static_cast<std::size_t>(t));
        const MultipathChannel chan = sample_taps(spec, mix_seed(ts, 1));
        const SymbolGrid h = channel_coeffs(cfg, chan);
        NoiseSpec noise = NoiseSpec::from_snr_db(cfg, snr_db, mix_seed(ts, 2));
        const SymbolGrid y = apply_channel(x, h, noise);
        TrialRecord& rec = records[t];
        try {
          const EstimateSet init = initial_estimate(cfg, y, x, opts, region);
          fill_stage(cfg, chan, init, rec.initial);
          if (opts.refine_iterations > 0) {
            const EstimateSet ref = refine(cfg, y, x, init, opts, region);
            fill_stage(cfg, chan, ref, rec.refined);
          } else {
            rec.refined = rec.initial;
          }
        } catch (const std::exception&) {
          rec.error = true;  // counted as a miss in both stages
        }
      }
    };
    if (threads == 1 || spec.trials <= 1) {
      worker(0);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(threads);
      for (int i = 0; i < threads; ++i) pool.emplace_back(worker, i);
      for (std::thread& th : pool) th.join();
    }

    SnrStats s;
    s.snr_db = snr_db;
    s.sigma2 = sigma2;
    s.trials = spec.trials;
    for (const TrialRecord& r : records) s.estimator_errors += r.error ? 1 : 0;
    s.initial = reduce_stage(records, false, spec.num_taps, &s.misses_initial);
    s.refined = reduce_stage(records, true, spec.num_taps, &s.misses_refined);
    for (int p = 0; p < spec.num_taps; ++p) {
      const double power = std::pow(10.0, spec.pdp_db[p] / 10.0);
      const CrlbBounds b = crlb_single_tap(cfg, sigma2, power);
      s.crlb_std_tau.push_back(std::sqrt(b.var_tau_over_t) * cfg.t_useful);
      s.crlb_std_nu.push_back(std::sqrt(b.var_nu_td) / cfg.t_symbol);
    }
    stats.per_snr.push_back(std::move(s));
  }
  return stats;
}

}  // namespace ofdmtap
