#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace ofdmtap {

using cd = std::complex<double>;

/// Multiplies two complex doubles with plain real arithmetic (no Annex-G
/// special-value handling, no __muldc3 call).
inline cd cmul(cd a, cd b) {
  return {a.real() * b.real() - a.imag() * b.imag(),
          a.real() * b.imag() + a.imag() * b.real()};
}

inline double abs2(cd a) { return a.real() * a.real() + a.imag() * a.imag(); }

/// Static OFDM system parameters.
struct OfdmConfig {
  int subcarriers = 0;        ///< K
  int symbols = 0;            ///< L, OFDM symbols per packet
  double t_useful = 0.0;      ///< inverse subcarrier spacing, seconds
  double t_symbol = 0.0;      ///< full symbol duration incl. cyclic prefix, seconds
  double t_cp = 0.0;          ///< cyclic prefix duration, seconds
  std::vector<int> null_set;  ///< 1-based null subcarrier indices

  /// 802.11a/p-style preset: 52 subcarriers with a DC null, 6.4 us useful
  /// duration, 8 us symbol duration.
  static OfdmConfig ieee80211(int symbols);

  void validate() const;  // throws std::invalid_argument

  int active_subcarriers() const;
  bool is_null1(int k1) const;  ///< 1-based subcarrier index
  /// Index offset of the DC bin: subcarrier k (1-based) sits at baseband
  /// frequency (k - 1 - center_shift()) / t_useful.
  int center_shift() const { return subcarriers / 2; }
  std::size_t grid_size() const {
    return static_cast<std::size_t>(subcarriers) * static_cast<std::size_t>(symbols);
  }
};

struct ChannelTap {
  cd gain;
  double delay = 0.0;    ///< seconds
  double doppler = 0.0;  ///< Hz
};

/// Soft model-validity flags; exceeding these bounds degrades the
/// frequency-domain model but is not an error.
struct ModelLimitFlags {
  bool delay_exceeds_cp = false;
  bool doppler_exceeds_spacing = false;
};

struct MultipathChannel {
  std::vector<ChannelTap> taps;

  void validate() const;  // throws std::invalid_argument
  ModelLimitFlags limit_flags(const OfdmConfig& cfg) const;
  int size() const { return static_cast<int>(taps.size()); }
};

/// L x K complex matrix (symbols x subcarriers). One type serves the
/// transmit grid, the channel coefficients, the received grid, and
/// residuals. Storage is symbol-major (subcarrier columns are contiguous),
/// which makes data() the stacked per-subcarrier column vector used by the
/// vectorized model.
class SymbolGrid {
 public:
  SymbolGrid() = default;
  SymbolGrid(int symbols, int subcarriers)
      : rows_(symbols),
        cols_(subcarriers),
        v_(static_cast<std::size_t>(symbols) * static_cast<std::size_t>(subcarriers)) {}

  int rows() const { return rows_; }  ///< L
  int cols() const { return cols_; }  ///< K
  std::size_t size() const { return v_.size(); }

  cd& operator()(int l, int k) { return v_[static_cast<std::size_t>(k) * rows_ + l]; }
  cd operator()(int l, int k) const { return v_[static_cast<std::size_t>(k) * rows_ + l]; }

  /// 1-based (l, k) accessor matching the usual symbol/subcarrier numbering.
  cd at1(int l, int k) const { return (*this)(l - 1, k - 1); }

  cd* data() { return v_.data(); }
  const cd* data() const { return v_.data(); }
  cd* col(int k) { return v_.data() + static_cast<std::size_t>(k) * rows_; }
  const cd* col(int k) const { return v_.data() + static_cast<std::size_t>(k) * rows_; }

  double squared_norm() const;

  bool same_shape(const SymbolGrid& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<cd> v_;
};

/// Additive-noise parameters. The per-entry complex variance follows from
/// the linear SNR as sigma2 = active_subcarriers / snr.
struct NoiseSpec {
  double sigma2 = 0.0;
  double snr = 0.0;  ///< linear; 0 means "noiseless, snr undefined"
  std::uint64_t seed = 0;

  static NoiseSpec from_snr_linear(const OfdmConfig& cfg, double snr_linear,
                                   std::uint64_t seed);
  static NoiseSpec from_snr_db(const OfdmConfig& cfg, double snr_db, std::uint64_t seed);
  static NoiseSpec noiseless() { return {}; }
};

}  // namespace ofdmtap
