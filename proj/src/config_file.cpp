#include "ofdmtap/config_file.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ofdmtap {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("config: " + msg); }

/// One parsed section; every key must be consumed exactly once.
class Section {
 public:
  Section() = default;
  Section(std::string name, std::map<std::string, std::string> kv)
      : name_(std::move(name)), kv_(std::move(kv)) {}

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string get_string(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) fail("[" + name_ + "] missing required key '" + key + "'");
    used_.insert(key);
    return it->second;
  }

  std::string get_string_or(const std::string& key, const std::string& def) {
    return has(key) ? get_string(key) : def;
  }

  double get_double(const std::string& key) { return to_double(key, get_string(key)); }
  double get_double_or(const std::string& key, double def) {
    return has(key) ? get_double(key) : def;
  }
  std::optional<double> get_opt_double(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return get_double(key);
  }

  long long get_int(const std::string& key) { return to_int(key, get_string(key)); }
  long long get_int_or(const std::string& key, long long def) {
    return has(key) ? get_int(key) : def;
  }

  std::uint64_t get_u64_or(const std::string& key, std::uint64_t def) {
    if (!has(key)) return def;
    const std::string v = get_string(key);
    try {
      return std::stoull(v);
    } catch (...) {
      fail("[" + name_ + "] key '" + key + "': expected unsigned integer, got '" + v + "'");
    }
  }

  std::vector<double> get_double_list(const std::string& key) {
    const std::string raw = get_string(key);
    std::vector<double> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) fail("[" + name_ + "] key '" + key + "': empty list element");
      out.push_back(to_double(key, item));
    }
    if (out.empty()) fail("[" + name_ + "] key '" + key + "': empty list");
    return out;
  }

  std::vector<int> get_int_list_or(const std::string& key) {
    if (!has(key)) return {};
    std::vector<int> out;
    for (double v : get_double_list(key)) out.push_back(static_cast<int>(v));
    return out;
  }

  void finish() const {
    for (const auto& [k, v] : kv_) {
      if (used_.count(k) == 0) fail("[" + name_ + "] unknown key '" + k + "'");
    }
  }

 private:
  double to_double(const std::string& key, const std::string& v) const {
    try {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (...) {
      fail("[" + name_ + "] key '" + key + "': expected number, got '" + v + "'");
    }
  }
  long long to_int(const std::string& key, const std::string& v) const {
    try {
      std::size_t pos = 0;
      const long long d = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (...) {
      fail("[" + name_ + "] key '" + key + "': expected integer, got '" + v + "'");
    }
  }

  std::string name_;
  std::map<std::string, std::string> kv_;
  mutable std::set<std::string> used_;
};

std::map<std::string, Section> parse_sections(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path.string());
  static const std::set<std::string> known = {"ofdm",   "channel", "estimator", "sim",
                                              "output", "ambiguity", "validate"};
  std::map<std::string, std::map<std::string, std::string>> raw;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("line " + std::to_string(lineno) + ": malformed section");
      section = trim(line.substr(1, line.size() - 2));
      if (known.count(section) == 0) fail("unknown section [" + section + "]");
      raw[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("line " + std::to_string(lineno) + ": expected key=value");
    if (section.empty()) fail("line " + std::to_string(lineno) + ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) fail("line " + std::to_string(lineno) + ": empty key");
    if (!raw[section].emplace(key, val).second) {
      fail("[" + section + "] duplicate key '" + key + "'");
    }
  }
  std::map<std::string, Section> out;
  for (auto& [name, kv] : raw) out.emplace(name, Section(name, std::move(kv)));
  return out;
}

void load_ofdm(Section& s, RunConfig& rc) {
  const std::string preset = s.get_string_or("preset", "");
  if (preset == "ieee80211") {
    rc.ofdm = OfdmConfig::ieee80211(static_cast<int>(s.get_int("symbols")));
    rc.ofdm.subcarriers = static_cast<int>(s.get_int_or("subcarriers", rc.ofdm.subcarriers));
  } else if (preset.empty()) {
    rc.ofdm.subcarriers = static_cast<int>(s.get_int("subcarriers"));
    rc.ofdm.symbols = static_cast<int>(s.get_int("symbols"));
    rc.ofdm.t_useful = s.get_double("t_useful_us") * 1e-6;
    rc.ofdm.t_cp = s.get_double("t_cp_us") * 1e-6;
    rc.ofdm.t_symbol = rc.ofdm.t_useful + rc.ofdm.t_cp;
    rc.ofdm.null_set = s.get_int_list_or("null_subcarriers");
  } else {
    fail("[ofdm] unknown preset '" + preset + "'");
  }
  const std::string con = s.get_string_or("constellation", "all_ones");
  if (con == "all_ones") {
    rc.symbols.kind = Constellation::AllOnes;
  } else if (con == "psk") {
    rc.symbols.kind = Constellation::Psk;
    rc.symbols.psk_order = static_cast<int>(s.get_int_or("psk_order", 4));
  } else {
    fail("[ofdm] constellation must be all_ones or psk");
  }
  rc.symbol_seed = s.get_u64_or("symbol_seed", 0);
  s.finish();
  rc.ofdm.validate();
}

void load_channel(Section& s, RunConfig& rc) {
  const std::string mode = s.get_string("mode");
  if (mode == "taps") {
    rc.channel_mode = RunConfig::ChannelMode::Explicit;
    const int n = static_cast<int>(s.get_int("num_taps"));
    for (int i = 1; i <= n; ++i) {
      const std::string p = "tap" + std::to_string(i);
      ChannelTap tap;
      tap.gain = cd{s.get_double(p + "_re"), s.get_double(p + "_im")};
      tap.delay = s.get_double(p + "_tau_ns") * 1e-9;
      tap.doppler = s.get_double(p + "_nu_hz");
      rc.channel_taps.taps.push_back(tap);
    }
    rc.channel_taps.validate();
  } else if (mode == "scenario") {
    rc.channel_mode = RunConfig::ChannelMode::Scenario;
    RunConfig::ScenarioGeometry g;
    g.num_taps = static_cast<int>(s.get_int("num_taps"));
    g.pdp_db = s.get_double_list("pdp_db");
    g.tau_min = s.get_double("tau_min_ns") * 1e-9;
    g.tau_max = s.get_double("tau_max_ns") * 1e-9;
    g.nu_min = s.get_double("nu_min_hz");
    g.nu_max = s.get_double("nu_max_hz");
    g.min_delay_gap = s.get_double("min_delay_gap_ns") * 1e-9;
    g.min_doppler_gap = s.get_double("min_doppler_gap_hz");
    rc.scenario = g;
  } else {
    fail("[channel] mode must be taps or scenario");
  }
  s.finish();
}

void load_estimator(Section& s, RunConfig& rc) {
  rc.has_estimator = true;
  rc.estimator.num_taps = static_cast<int>(s.get_int("num_taps"));
  rc.estimator.refine_iterations = static_cast<int>(s.get_int_or("refine_iterations", 0));
  rc.estimator.min_amplitude = s.get_opt_double("min_amplitude");
  rc.estimator.early_stop_tol = s.get_opt_double("early_stop_tol");
  const std::string dom = s.get_string_or("domain", "matched_y");
  if (dom == "matched_y") {
    rc.estimator.domain = EstimatorDomain::MatchedY;
  } else if (dom == "zero_forcing_h") {
    rc.estimator.domain = EstimatorDomain::ZeroForcingH;
  } else {
    fail("[estimator] domain must be matched_y or zero_forcing_h");
  }
  rc.region.delay_bins = static_cast<int>(s.get_int_or("delay_bins", 16));
  rc.region.doppler_bins = static_cast<int>(s.get_int_or("doppler_bins", 16));
  rc.region.shrink = s.get_double_or("shrink", 1.0);
  rc.region.max_iterations = static_cast<int>(s.get_int_or("bisect_iterations", 8));
  rc.region.eps_tau = s.get_double_or("eps_tau_ns", 0.01) * 1e-9;
  rc.region.eps_nu = s.get_double_or("eps_nu_hz", 1e-3);
  rc.region.tau_min = s.get_double("tau_min_ns") * 1e-9;
  rc.region.tau_max = s.get_double("tau_max_ns") * 1e-9;
  rc.region.nu_min = s.get_double("nu_min_hz");
  rc.region.nu_max = s.get_double("nu_max_hz");
  s.finish();
  rc.estimator.validate();
  rc.region.validate();
}

void load_sim(Section& s, RunConfig& rc) {
  rc.has_sim = true;
  rc.trials = static_cast<int>(s.get_int_or("trials", 0));
  if (s.has("snr_db")) rc.snr_db = s.get_double_list("snr_db");
  rc.seed = s.get_u64_or("seed", 0);
  rc.threads = static_cast<int>(s.get_int_or("threads", 0));
  s.finish();
}

void load_output(Section& s, RunConfig& rc) {
  rc.output_dir = s.get_string_or("dir", ".");
  s.finish();
}

void load_ambiguity(Section& s, RunConfig& rc) {
  RunConfig::AmbiguityGridSpec g;
  g.tau_min = s.get_double("tau_min_ns") * 1e-9;
  g.tau_max = s.get_double("tau_max_ns") * 1e-9;
  g.tau_points = static_cast<int>(s.get_int("tau_points"));
  g.nu_min = s.get_double("nu_min_hz");
  g.nu_max = s.get_double("nu_max_hz");
  g.nu_points = static_cast<int>(s.get_int("nu_points"));
  if (g.tau_points < 2 || g.nu_points < 2) fail("[ambiguity] need >= 2 points per axis");
  if (!(g.tau_min < g.tau_max) || !(g.nu_min < g.nu_max)) {
    fail("[ambiguity] empty axis range");
  }
  rc.ambiguity = g;
  s.finish();
}

void load_validate(Section& s, RunConfig& rc) {
  RunConfig::ValidateSpec v;
  v.wcfg.oversample = static_cast<int>(s.get_int_or("oversample", 16));
  v.in_cp_tau = s.get_double_or("in_cp_tau_ns", rc.ofdm.t_cp * 0.5 * 1e9) * 1e-9;
  v.in_cp_nu = s.get_double_or("in_cp_nu_hz", 0.004 / rc.ofdm.t_symbol);
  v.violating_tau = s.get_double_or("violating_tau_ns", rc.ofdm.t_cp * 1.5 * 1e9) * 1e-9;
  v.violating_nu = s.get_double_or("violating_nu_hz", v.in_cp_nu);
  rc.validate = v;
  s.finish();
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& path) {
  auto sections = parse_sections(path);
  RunConfig rc;
  auto it = sections.find("ofdm");
  if (it == sections.end()) fail("missing required section [ofdm]");
  load_ofdm(it->second, rc);
  if ((it = sections.find("channel")) != sections.end()) load_channel(it->second, rc);
  if ((it = sections.find("estimator")) != sections.end()) load_estimator(it->second, rc);
  if ((it = sections.find("sim")) != sections.end()) load_sim(it->second, rc);
  if ((it = sections.find("output")) != sections.end()) load_output(it->second, rc);
  if ((it = sections.find("ambiguity")) != sections.end()) load_ambiguity(it->second, rc);
  if ((it = sections.find("validate")) != sections.end()) load_validate(it->second, rc);
  return rc;
}

ScenarioSpec make_scenario(const RunConfig& rc) {
  if (!rc.scenario.has_value()) fail("this command needs [channel] mode = scenario");
  if (!rc.has_sim) fail("this command needs a [sim] section");
  const RunConfig::ScenarioGeometry& g = *rc.scenario;
  ScenarioSpec s;
  s.num_taps = g.num_taps;
  s.pdp_db = g.pdp_db;
  s.tau_min = g.tau_min;
  s.tau_max = g.tau_max;
  s.nu_min = g.nu_min;
  s.nu_max = g.nu_max;
  s.min_delay_gap = g.min_delay_gap;
  s.min_doppler_gap = g.min_doppler_gap;
  s.snr_grid_db = rc.snr_db;
  s.trials = rc.trials;
  s.seed = rc.seed;
  s.validate();
  return s;
}

}  // namespace ofdmtap
