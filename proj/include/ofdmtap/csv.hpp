#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "ofdmtap/ambiguity.hpp"
#include "ofdmtap/estimator.hpp"
#include "ofdmtap/montecarlo.hpp"

namespace ofdmtap {

/// Writes through a temp file in the destination directory and renames on
/// commit, so a failed run never leaves a partial artifact behind.
class AtomicFile {
 public:
  explicit AtomicFile(std::filesystem::path target);
  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;
  ~AtomicFile();

  std::ofstream& stream() { return out_; }
  void commit();

 private:
  std::filesystem::path target_, temp_;
  std::ofstream out_;
  bool committed_ = false;
};

/// Floats with 12 significant digits.
std::string fmt_g12(double v);

void write_ambiguity_csv(const std::filesystem::path& path, const AmbiguityGrid& grid);

/// Stage is "initial" or "refined"; pass refined = nullptr to emit one stage.
void write_estimates_csv(const std::filesystem::path& path, const EstimateSet& initial,
                         const EstimateSet* refined);

enum class StatsStage { Initial, Refined };
void write_trial_stats_csv(const std::filesystem::path& path, const TrialStats& stats,
                           StatsStage stage);

}  // namespace ofdmtap
