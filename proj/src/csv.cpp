#include "ofdmtap/csv.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace ofdmtap {

AtomicFile::AtomicFile(std::filesystem::path target) : target_(std::move(target)) {
  temp_ = target_;
  temp_ += ".tmp";
  out_.open(temp_, std::ios::binary | std::ios::trunc);
  if (!out_) {
    throw std::runtime_error("cannot open " + temp_.string() + " for writing");
  }
}

AtomicFile::~AtomicFile() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(temp_, ec);
  }
}

void AtomicFile::commit() {
  out_.flush();
  if (!out_) throw std::runtime_error("write failed for " + temp_.string());
  out_.close();
  std::filesystem::rename(temp_, target_);
  committed_ = true;
}

std::string fmt_g12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_ambiguity_csv(const std::filesystem::path& path, const AmbiguityGrid& grid) {
  AtomicFile f(path);
  auto& os = f.stream();
  os << "tau_sec,nu_hz,re,im,abs\n";
  for (std::size_t ti = 0; ti < grid.tau_axis.size(); ++ti) {
    for (std::size_t ni = 0; ni < grid.nu_axis.size(); ++ni) {
      const cd v = grid.at(ti, ni);
      os << fmt_g12(grid.tau_axis[ti]) << ',' << fmt_g12(grid.nu_axis[ni]) << ','
         << fmt_g12(v.real()) << ',' << fmt_g12(v.imag()) << ',' << fmt_g12(std::abs(v))
         << '\n';
    }
  }
  f.commit();
}

namespace {

void write_stage_rows(std::ofstream& os, const EstimateSet& est, const char* stage) {
  for (std::size_t p = 0; p < est.taps.size(); ++p) {
    const TapEstimate& t = est.taps[p];
    const double mag = std::abs(t.gain);
    const double db = 20.0 * std::log10(std::max(mag, 1e-300));
    os << (p + 1) << ',' << fmt_g12(t.gain.real()) << ',' << fmt_g12(t.gain.imag()) << ','
       << fmt_g12(db) << ',' << fmt_g12(t.delay * 1e9) << ',' << fmt_g12(t.doppler) << ','
       << stage << '\n';
  }
}

}  // namespace

void write_estimates_csv(const std::filesystem::path& path, const EstimateSet& initial,
                         const EstimateSet* refined) {
  AtomicFile f(path);
  auto& os = f.stream();
  os << "p,re_a,im_a,abs_a_db,tau_ns,nu_hz,stage\n";
  write_stage_rows(os, initial, "initial");
  if (refined != nullptr) write_stage_rows(os, *refined, "refined");
  f.commit();
}

void write_trial_stats_csv(const std::filesystem::path& path, const TrialStats& stats,
                           StatsStage stage) {
  AtomicFile f(path);
  auto& os = f.stream();
  os << "snr_db,tap_index,rms_tau_ns,rms_nu_hz,rms_gain,crlb_std_tau_ns,crlb_std_nu_hz,"
        "miss_rate,n_detected\n";
  for (const SnrStats& s : stats.per_snr) {
    const auto& per_tap = stage == StatsStage::Refined ? s.refined : s.initial;
    const int misses = stage == StatsStage::Refined ? s.misses_refined : s.misses_initial;
    const double miss_rate = s.trials > 0 ? static_cast<double>(misses) / s.trials : 0.0;
    for (std::size_t p = 0; p < per_tap.size(); ++p) {
      os << fmt_g12(s.snr_db) << ',' << (p + 1) << ',' << fmt_g12(per_tap[p].rms_tau * 1e9)
         << ',' << fmt_g12(per_tap[p].rms_nu) << ',' << fmt_g12(per_tap[p].rms_gain) << ','
         << fmt_g12(s.crlb_std_tau[p] * 1e9) << ',' << fmt_g12(s.crlb_std_nu[p]) << ','
         << fmt_g12(miss_rate) << ',' << (s.trials - misses) << '\n';
    }
  }
  f.commit();
}

}  // namespace ofdmtap
