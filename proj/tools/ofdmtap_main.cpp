#include <CLI11.hpp>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ofdmtap/ambiguity.hpp"
#include "ofdmtap/config_file.hpp"
#include "ofdmtap/csv.hpp"
#include "ofdmtap/estimator.hpp"
#include "ofdmtap/kernels.hpp"
#include "ofdmtap/montecarlo.hpp"
#include "ofdmtap/rng.hpp"
#include "ofdmtap/signal_model.hpp"
#include "ofdmtap/waveform.hpp"

namespace fs = std::filesystem;
using namespace ofdmtap;

namespace {

struct GlobalArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> threads;
};

fs::path resolve_out_dir(const RunConfig& rc) {
  if (const char* env = std::getenv("OFDMTAP_OUT"); env != nullptr && *env != '\0') {
    return env;
  }
  return rc.output_dir;
}

fs::path resolve_out_file(const GlobalArgs& args, const RunConfig& rc,
                          const std::string& fallback_name) {
  if (!args.out.empty()) return args.out;
  return resolve_out_dir(rc) / fallback_name;
}

void apply_overrides(const GlobalArgs& args, RunConfig& rc) {
  if (args.seed.has_value()) rc.seed = *args.seed;
  if (args.trials.has_value()) rc.trials = *args.trials;
  if (args.threads.has_value()) rc.threads = *args.threads;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) {
    v[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  }
  return v;
}

int cmd_ambiguity(const GlobalArgs& args) {
  RunConfig rc = RunConfig::load(args.config);
  if (!rc.ambiguity.has_value()) {
    throw std::invalid_argument("config: ambiguity command needs an [ambiguity] section");
  }
  const auto& g = *rc.ambiguity;
  const AmbiguityGrid grid =
      sample_ambiguity(rc.ofdm, linspace(g.tau_min, g.tau_max, g.tau_points),
                       linspace(g.nu_min, g.nu_max, g.nu_points));
  const fs::path out = resolve_out_file(args, rc, "ambiguity.csv");
  fs::create_directories(out.parent_path().empty() ? "." : out.parent_path());
  write_ambiguity_csv(out, grid);
  std::cout << "wrote " << out.string() << " (" << grid.tau_axis.size() << " x "
            << grid.nu_axis.size() << " points)\n";
  return 0;
}

SymbolGrid read_grid_csv(const fs::path& path, const OfdmConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open input grid " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("input grid is empty");
  if (line != "l,k,re,im" && line != "l,k,re,im\r") {
    throw std::invalid_argument("input grid must start with header l,k,re,im");
  }
  SymbolGrid y(cfg.symbols, cfg.subcarriers);
  std::vector<bool> seen(y.size(), false);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 4) {
      throw std::invalid_argument("input grid: expected 4 columns, got " +
                                  std::to_string(fields.size()));
    }
    const int l = std::stoi(fields[0]);
    const int k = std::stoi(fields[1]);
    if (l < 1 || l > cfg.symbols || k < 1 || k > cfg.subcarriers) {
      throw std::invalid_argument("input grid: (l,k) index out of range");
    }
    y(l - 1, k - 1) = cd{std::stod(fields[2]), std::stod(fields[3])};
    seen[static_cast<std::size_t>(k - 1) * cfg.symbols + (l - 1)] = true;
    ++rows;
  }
  if (rows != y.size()) {
    throw std::invalid_argument("input grid: expected " + std::to_string(y.size()) +
                                " rows, got " + std::to_string(rows));
  }
  for (bool b : seen) {
    if (!b) throw std::invalid_argument("input grid: duplicate and missing entries");
  }
  return y;
}

int cmd_estimate(const GlobalArgs& args, const std::string& input, bool synthetic) {
  RunConfig rc = RunConfig::load(args.config);
  apply_overrides(args, rc);
  if (!rc.has_estimator) {
    throw std::invalid_argument("config: estimate command needs an [estimator] section");
  }
  const SymbolGrid x = generate_symbols(rc.ofdm, rc.symbols, rc.symbol_seed);
  SymbolGrid y;
  if (synthetic) {
    if (rc.channel_mode != RunConfig::ChannelMode::Explicit) {
      throw std::invalid_argument("config: --synthetic needs [channel] mode = taps");
    }
    const SymbolGrid h = channel_coeffs(rc.ofdm, rc.channel_taps);
    NoiseSpec noise = NoiseSpec::noiseless();
    if (rc.has_sim && !rc.snr_db.empty()) {
      noise = NoiseSpec::from_snr_db(rc.ofdm, rc.snr_db.front(), mix_seed(rc.seed, 3));
    }
    y = apply_channel(x, h, noise);
  } else {
    y = read_grid_csv(input, rc.ofdm);
  }
  const EstimateSet initial = initial_estimate(rc.ofdm, y, x, rc.estimator, rc.region);
  const EstimateSet refined = refine(rc.ofdm, y, x, initial, rc.estimator, rc.region);
  const fs::path out = resolve_out_file(args, rc, "estimates.csv");
  fs::create_directories(out.parent_path().empty() ? "." : out.parent_path());
  write_estimates_csv(out, initial, &refined);
  std::cout << "wrote " << out.string() << " (" << initial.taps.size()
            << " taps, refined over " << refined.refine_iters_used << " sweeps)\n";
  return 0;
}

int cmd_montecarlo(const GlobalArgs& args) {
  RunConfig rc = RunConfig::load(args.config);
  apply_overrides(args, rc);
  if (!rc.has_estimator) {
    throw std::invalid_argument("config: montecarlo command needs an [estimator] section");
  }
  const ScenarioSpec spec = make_scenario(rc);
  const fs::path dir = args.out.empty() ? resolve_out_dir(rc) : fs::path(args.out);
  fs::create_directories(dir);

  TrialStats stats;
  if (spec.trials > 0) {
    RunOptions run;
    run.threads = rc.threads;
    stats = run_trials(rc.ofdm, spec, rc.estimator, rc.region, run);
  }
  write_trial_stats_csv(dir / "montecarlo_refined.csv", stats, StatsStage::Refined);
  write_trial_stats_csv(dir / "montecarlo_initial.csv", stats, StatsStage::Initial);

  std::cout << "snr_db tap rms_tau_ns crlb_tau_ns rms_nu_hz crlb_nu_hz miss_rate\n";
  for (const SnrStats& s : stats.per_snr) {
    for (std::size_t p = 0; p < s.refined.size(); ++p) {
      const double miss =
          s.trials > 0 ? static_cast<double>(s.misses_refined) / s.trials : 0.0;
      std::cout << s.snr_db << ' ' << p + 1 << ' ' << s.refined[p].rms_tau * 1e9 << ' '
                << s.crlb_std_tau[p] * 1e9 << ' ' << s.refined[p].rms_nu << ' '
                << s.crlb_std_nu[p] << ' ' << miss << '\n';
    }
  }
  std::cout << "wrote " << (dir / "montecarlo_refined.csv").string() << " and "
            << (dir / "montecarlo_initial.csv").string() << '\n';
  return 0;
}

int cmd_validate(const GlobalArgs& args) {
  RunConfig rc = RunConfig::load(args.config);
  if (!rc.validate.has_value()) {
    throw std::invalid_argument("config: validate command needs a [validate] section");
  }
  const RunConfig::ValidateSpec& v = *rc.validate;
  const OfdmConfig& cfg = rc.ofdm;
  v.wcfg.validate(cfg);
  if (v.in_cp_tau >= cfg.t_cp) {
    throw std::invalid_argument("config: in_cp_tau_ns must stay below the cyclic prefix");
  }
  if (v.violating_tau <= cfg.t_cp) {
    throw std::invalid_argument("config: violating_tau_ns must exceed the cyclic prefix");
  }

  const SymbolGrid x = generate_symbols(cfg, rc.symbols, rc.symbol_seed);
  const SampledWaveform tx = synth_tx(cfg, x, v.wcfg);
  const double dt = tx.dt;
  const auto snap = [dt](double tau) { return std::round(tau / dt) * dt; };

  // loopback: matched filter of the transmit waveform returns the grid
  const SymbolGrid loop = matched_filter(cfg, tx, v.wcfg);
  double num = 0.0;
  for (int k = 0; k < cfg.subcarriers; ++k) {
    for (int l = 0; l < cfg.symbols; ++l) num += abs2(loop(l, k) - x(l, k));
  }
  const double loop_resid = std::sqrt(num / std::max(x.squared_norm(), 1e-300));
  const bool loop_ok = loop_resid <= 1e-6;
  std::cout << "loopback          residual " << loop_resid << "  tol 1e-06  "
            << (loop_ok ? "PASS" : "FAIL") << '\n';

  // single tap inside the prefix: matched-filter output vs the grid model up
  // to one complex scalar
  const auto tap_residual = [&](double tau, double nu, double* scale_mag) {
    MultipathChannel chan;
    chan.taps = {{cd{1.0, 0.0}, snap(tau), nu}};
    const SampledWaveform rx = apply_ct_channel(cfg, tx, chan, v.wcfg);
    const SymbolGrid yw = matched_filter(cfg, rx, v.wcfg);
    SymbolGrid hx = apply_channel(x, channel_coeffs(cfg, chan), NoiseSpec::noiseless());
    cd dot{};
    double ref2 = 0.0, err2 = 0.0;
    for (int k = 0; k < cfg.subcarriers; ++k) {
      for (int l = 0; l < cfg.symbols; ++l) {
        dot += cmul(std::conj(hx(l, k)), yw(l, k));
        ref2 += abs2(hx(l, k));
      }
    }
    const cd c = dot / ref2;
    for (int k = 0; k < cfg.subcarriers; ++k) {
      for (int l = 0; l < cfg.symbols; ++l) {
        err2 += abs2(yw(l, k) - cmul(c, hx(l, k)));
      }
    }
    if (scale_mag != nullptr) *scale_mag = std::abs(c);
    return std::sqrt(err2 / ref2);
  };

  double c_mag = 0.0;
  const double in_cp_resid = tap_residual(v.in_cp_tau, v.in_cp_nu, &c_mag);
  const double c_pred =
      std::abs(window_ambiguity(cfg, v.wcfg, snap(v.in_cp_tau), v.in_cp_nu)) /
      (cfg.t_useful / cfg.t_symbol);
  const bool in_cp_ok = in_cp_resid <= 1e-2;
  std::cout << "in-prefix tap     residual " << in_cp_resid << "  tol 1e-02  "
            << (in_cp_ok ? "PASS" : "FAIL") << "  (|c| " << c_mag << ", predicted "
            << c_pred << ")\n";

  const double viol_resid = tap_residual(v.violating_tau, v.violating_nu, nullptr);
  const bool order_ok = viol_resid > in_cp_resid;
  std::cout << "prefix-violating  residual " << viol_resid << "  must exceed "
            << in_cp_resid << "  " << (order_ok ? "PASS" : "FAIL") << '\n';

  if (!loop_ok) return 2;
  if (!in_cp_ok) return 3;
  if (!order_ok) return 4;
  return 0;
}

int cmd_crlb(const GlobalArgs& args) {
  RunConfig rc = RunConfig::load(args.config);
  apply_overrides(args, rc);
  std::vector<double> powers;
  if (rc.scenario.has_value()) {
    for (double db : rc.scenario->pdp_db) powers.push_back(std::pow(10.0, db / 10.0));
  } else if (rc.channel_mode == RunConfig::ChannelMode::Explicit) {
    for (const ChannelTap& t : rc.channel_taps.taps) powers.push_back(abs2(t.gain));
  } else {
    throw std::invalid_argument("config: crlb command needs a [channel] section");
  }
  if (rc.snr_db.empty()) {
    throw std::invalid_argument("config: crlb command needs [sim] snr_db");
  }
  std::cout << "snr_db tap gain_power sigma2 crlb_std_tau_ns crlb_std_nu_hz\n";
  for (double snr : rc.snr_db) {
    const double sigma2 = NoiseSpec::from_snr_db(rc.ofdm, snr, 0).sigma2;
    for (std::size_t p = 0; p < powers.size(); ++p) {
      const CrlbBounds b = crlb_single_tap(rc.ofdm, sigma2, powers[p]);
      std::cout << snr << ' ' << p + 1 << ' ' << powers[p] << ' ' << sigma2 << ' '
                << std::sqrt(b.var_tau_over_t) * rc.ofdm.t_useful * 1e9 << ' '
                << std::sqrt(b.var_nu_td) / rc.ofdm.t_symbol << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"doubly-dispersive multipath OFDM channel estimation toolkit"};
  app.require_subcommand(1);

  std::string backend = "auto";
  app.add_option("--backend", backend, "kernel backend: auto|scalar|avx2")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));

  GlobalArgs args;
  std::string input;
  bool synthetic = false;

  const auto add_common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--config", args.config, "experiment config file")->required();
    if (needs_out) sub->add_option("--out", args.out, "output file or directory");
    sub->add_option("--seed", args.seed, "override the config seed");
    sub->add_option("--trials", args.trials, "override the trial count");
    sub->add_option("--threads", args.threads, "worker threads (0 = hardware)");
  };

  CLI::App* amb = app.add_subcommand("ambiguity", "export the ambiguity surface as CSV");
  add_common(amb, true);
  CLI::App* est = app.add_subcommand("estimate", "estimate taps from a grid");
  add_common(est, true);
  est->add_option("--input", input, "received grid CSV (header l,k,re,im)");
  est->add_flag("--synthetic", synthetic, "synthesize the observation from the config");
  CLI::App* mc = app.add_subcommand("montecarlo", "run the random-channel sweep");
  add_common(mc, true);
  CLI::App* val = app.add_subcommand("validate", "time-domain model validation");
  add_common(val, false);
  CLI::App* crlb = app.add_subcommand("crlb", "print single-tap variance floors");
  add_common(crlb, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (backend == "scalar") {
      kernels::select_backend(kernels::Backend::Scalar);
    } else if (backend == "avx2") {
      kernels::select_backend(kernels::Backend::Avx2);
    } else {
      kernels::select_backend(kernels::Backend::Auto);
    }
    if (app.got_subcommand(amb)) return cmd_ambiguity(args);
    if (app.got_subcommand(est)) {
      if (synthetic ? !input.empty() : input.empty()) {
        throw std::invalid_argument("estimate needs exactly one of --input or --synthetic");
      }
      return cmd_estimate(args, input, synthetic);
    }
    if (app.got_subcommand(mc)) return cmd_montecarlo(args);
    if (app.got_subcommand(val)) return cmd_validate(args);
    if (app.got_subcommand(crlb)) return cmd_crlb(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
