#include "ofdmtap/estimator.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <string>

#include "ofdmtap/ambiguity.hpp"
#include "ofdmtap/kernels.hpp"
#include "ofdmtap/signal_model.hpp"

namespace ofdmtap {

void SearchRegion::validate() const {
  if (!(tau_min < tau_max)) throw std::invalid_argument("tau_min must be < tau_max");
  if (!(nu_min < nu_max)) throw std::invalid_argument("nu_min must be < nu_max");
  if (delay_bins < 3 || doppler_bins < 3) throw std::invalid_argument("need >= 3 bins per axis");
  if (shrink < 0.5) throw std::invalid_argument("shrink must be >= 1/2");
  if (max_iterations < 1) throw std::invalid_argument("need at least one iteration");
  if (eps_tau < 0.0 || eps_nu < 0.0) throw std::invalid_argument("eps must be >= 0");
}

void EstimatorOptions::validate() const {
  if (num_taps < 1) throw std::invalid_argument("num_taps must be >= 1");
  if (refine_iterations < 0) throw std::invalid_argument("refine_iterations must be >= 0");
  if (min_amplitude.has_value() && *min_amplitude < 0.0) {
    throw std::invalid_argument("min_amplitude must be >= 0");
  }
}

CollidingTapsError::CollidingTapsError(int i, int j)
    : std::runtime_error("gram matrix is near-singular: taps " + std::to_string(i) +
                         " and " + std::to_string(j) +
                         " nearly coincide in delay/Doppler"),
      tap_i(i),
      tap_j(j) {}

namespace {

constexpr int kMaxBinsPerAxis = 100000;

// In the zero-forcing domain the observation is mapped to per-entry channel
// estimates and the symbol grid to its 0/1 occupancy mask; the matched-domain
// pipeline then applies unchanged.
struct DomainGrids {
  const SymbolGrid* y = nullptr;
  const SymbolGrid* x = nullptr;
  SymbolGrid y_store, x_store;
};

DomainGrids make_domain(const SymbolGrid& y, const SymbolGrid& x, EstimatorDomain domain) {
  DomainGrids g;
  if (domain == EstimatorDomain::MatchedY) {
    g.y = &y;
    g.x = &x;
    return g;
  }
  g.y_store = SymbolGrid(y.rows(), y.cols());
  g.x_store = SymbolGrid(y.rows(), y.cols());
  for (int k = 0; k < y.cols(); ++k) {
    const cd* yc = y.col(k);
    const cd* xc = x.col(k);
    cd* hc = g.y_store.col(k);
    cd* mc = g.x_store.col(k);
    for (int l = 0; l < y.rows(); ++l) {
      const double mag = std::abs(xc[l]);
      if (mag > 0.0) {
        hc[l] = cmul(yc[l], std::conj(xc[l])) / mag;
        mc[l] = cd{1.0, 0.0};
      }
    }
  }
  g.y = &g.y_store;
  g.x = &g.x_store;
  return g;
}

struct PeakScratch {
  std::vector<cd> g;    // E .* conj(X), symbol-major like SymbolGrid
  std::vector<cd> psi;  // doppler steering, one column per bin
  std::vector<cd> phi;  // delay steering, one column per bin
  std::vector<cd> c;    // psi^H * G, row per doppler bin
  std::vector<double> tau_pts, nu_pts;
};

PeakResult search_peak(const OfdmConfig& cfg, const cd* g, const SearchRegion& region,
                       PeakScratch& s) {
  const auto& ops = kernels::active();
  const int rows = cfg.symbols, cols = cfg.subcarriers;
  double tlo = region.tau_min, thi = region.tau_max;
  double nlo = region.nu_min, nhi = region.nu_max;

  // First-iteration bin spacing must not exceed half the ambiguity main lobe
  // (t_useful/K in delay, 1/(L*t_symbol) in Doppler) or the coarse scan can
  // lock onto a sidelobe; widen the grid when the caller's bins are too few.
  const double half_lobe_tau = cfg.t_useful / (2.0 * cols);
  const double half_lobe_nu = 1.0 / (2.0 * rows * cfg.t_symbol);
  const int m1 = std::max(region.delay_bins,
                          static_cast<int>(std::ceil((thi - tlo) / half_lobe_tau)));
  const int n1 = std::max(region.doppler_bins,
                          static_cast<int>(std::ceil((nhi - nlo) / half_lobe_nu)));
  if (m1 > kMaxBinsPerAxis || n1 > kMaxBinsPerAxis) {
    throw std::invalid_argument("search region too wide for the grid resolution");
  }

  PeakResult out;
  out.densified = m1 > region.delay_bins || n1 > region.doppler_bins;

  for (int it = 1; it <= region.max_iterations; ++it) {
    const int mb = it == 1 ? m1 : region.delay_bins;
    const int nb = it == 1 ? n1 : region.doppler_bins;
    const double dtau = (thi - tlo) / mb;
    const double dnu = (nhi - nlo) / nb;
    if (it > 1 && dtau < region.eps_tau && dnu < region.eps_nu) break;

    s.tau_pts.resize(mb);
    s.nu_pts.resize(nb);
    s.phi.resize(static_cast<std::size_t>(mb) * cols);
    s.psi.resize(static_cast<std::size_t>(nb) * rows);
    s.c.resize(static_cast<std::size_t>(nb) * cols);
    for (int m = 0; m < mb; ++m) {
      s.tau_pts[m] = tlo + m * dtau;
      fill_delay_steering(cfg, s.tau_pts[m], s.phi.data() + static_cast<std::size_t>(m) * cols);
    }
    for (int n = 0; n < nb; ++n) {
      s.nu_pts[n] = nlo + n * dnu;
      fill_doppler_steering(cfg, s.nu_pts[n],
                            s.psi.data() + static_cast<std::size_t>(n) * rows);
    }
    for (int n = 0; n < nb; ++n) {
      const cd* psin = s.psi.data() + static_cast<std::size_t>(n) * rows;
      cd* crow = s.c.data() + static_cast<std::size_t>(n) * cols;
      for (int k = 0; k < cols; ++k) {
        crow[k] = ops.dotc(psin, g + static_cast<std::size_t>(k) * rows, rows);
      }
    }

    int best_m = 0, best_n = 0;
    double best_sq = -1.0;
    cd best_val{};
    for (int n = 0; n < nb; ++n) {
      const cd* crow = s.c.data() + static_cast<std::size_t>(n) * cols;
      for (int m = 0; m < mb; ++m) {
        const cd v =
            ops.dotu(crow, s.phi.data() + static_cast<std::size_t>(m) * cols, cols);
        const double sq = abs2(v);
        if (sq > best_sq) {
          best_sq = sq;
          best_n = n;
          best_m = m;
          best_val = v;
        }
      }
    }

    out.tau = s.tau_pts[best_m];
    out.nu = s.nu_pts[best_n];
    out.corr = best_val;

    tlo = std::max(region.tau_min, out.tau - region.shrink * dtau);
    thi = std::min(region.tau_max, out.tau + region.shrink * dtau);
    nlo = std::max(region.nu_min, out.nu - region.shrink * dnu);
    nhi = std::min(region.nu_max, out.nu + region.shrink * dnu);
  }
  return out;
}

const cd* domain_grid(const OfdmConfig& cfg, const SymbolGrid& e, const SymbolGrid& x,
                      EstimatorDomain domain, PeakScratch& s) {
  if (e.rows() != cfg.symbols || e.cols() != cfg.subcarriers || !e.same_shape(x)) {
    throw std::invalid_argument("grid dimensions do not match config");
  }
  if (domain == EstimatorDomain::ZeroForcingH) return e.data();
  s.g.resize(e.size());
  kernels::active().hadamard_conj(s.g.data(), e.data(), x.data(), e.size());
  return s.g.data();
}

// out = base - (sum_p gain_p * psi_p phi_p^H) .* x, optionally skipping one tap
void subtract_taps(const OfdmConfig& cfg, const SymbolGrid& base, const SymbolGrid& x,
                   std::span<const TapEstimate> taps, int skip, SymbolGrid& out,
                   std::vector<cd>& psi_store, std::vector<cd>& phi_store,
                   std::vector<cd>& accum) {
  const auto& ops = kernels::active();
  const int rows = cfg.symbols, cols = cfg.subcarriers;
  const std::size_t p = taps.size();
  psi_store.resize(p * rows);
  phi_store.resize(p * cols);
  accum.resize(rows);
  for (std::size_t i = 0; i < p; ++i) {
    if (static_cast<int>(i) == skip) continue;
    fill_doppler_steering(cfg, taps[i].doppler, psi_store.data() + i * rows);
    fill_delay_steering(cfg, taps[i].delay, phi_store.data() + i * cols);
  }
  if (out.rows() != rows || out.cols() != cols) out = SymbolGrid(rows, cols);
  for (int k = 0; k < cols; ++k) {
    std::fill(accum.begin(), accum.end(), cd{});
    for (std::size_t i = 0; i < p; ++i) {
      if (static_cast<int>(i) == skip) continue;
      const cd coeff = cmul(taps[i].gain, std::conj(phi_store[i * cols + k]));
      ops.axpy(accum.data(), coeff, psi_store.data() + i * rows, rows);
    }
    ops.mulsub(out.col(k), base.col(k), accum.data(), x.col(k), rows);
  }
}

// Gram matrix rebuilt from the explicit model columns; validation path only.
std::vector<cd> gram_from_columns(const OfdmConfig& cfg, const SymbolGrid& x,
                                  std::span<const double> taus,
                                  std::span<const double> nus) {
  const std::vector<cd> omega = omega_matrix(cfg, x, taus, nus);
  const Eigen::Index kl = static_cast<Eigen::Index>(cfg.grid_size());
  const Eigen::Index p = static_cast<Eigen::Index>(taus.size());
  Eigen::Map<const Eigen::MatrixXcd> om(omega.data(), kl, p);
  Eigen::MatrixXcd r = om.adjoint() * om;
  return {r.data(), r.data() + p * p};
}

std::vector<TapEstimate> zip_taps(std::span<const cd> gains, std::span<const double> taus,
                                  std::span<const double> nus) {
  std::vector<TapEstimate> taps(gains.size());
  for (std::size_t i = 0; i < gains.size(); ++i) {
    taps[i] = {gains[i], taus[i], nus[i]};
  }
  return taps;
}

}  // namespace

cd periodogram_point(const OfdmConfig& cfg, const SymbolGrid& e, const SymbolGrid& x,
                     double tau, double nu, EstimatorDomain domain) {
  PeakScratch s;
  const cd* g = domain_grid(cfg, e, x, domain, s);
  const auto& ops = kernels::active();
  std::vector<cd> psi(cfg.symbols), phi(cfg.subcarriers), row(cfg.subcarriers);
  fill_doppler_steering(cfg, nu, psi.data());
  fill_delay_steering(cfg, tau, phi.data());
  for (int k = 0; k < cfg.subcarriers; ++k) {
    row[k] = ops.dotc(psi.data(), g + static_cast<std::size_t>(k) * cfg.symbols, psi.size());
  }
  return ops.dotu(row.data(), phi.data(), row.size());
}

PeakResult bisection_peak(const OfdmConfig& cfg, const SymbolGrid& e, const SymbolGrid& x,
                          const SearchRegion& region, EstimatorDomain domain) {
  cfg.validate();
  region.validate();
  PeakScratch s;
  const cd* g = domain_grid(cfg, e, x, domain, s);
  return search_peak(cfg, g, region, s);
}

std::vector<cd> ls_amplitudes(std::span<const cd> r, std::span<const cd> w) {
  const Eigen::Index p = static_cast<Eigen::Index>(w.size());
  if (p == 0 || r.size() != w.size() * w.size()) {
    throw std::invalid_argument("gram/correlation size mismatch");
  }
  Eigen::Map<const Eigen::MatrixXcd> rm(r.data(), p, p);
  Eigen::Map<const Eigen::VectorXcd> wv(w.data(), p);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rm);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
  const Eigen::VectorXd evals = es.eigenvalues();
  const double lmax = evals(p - 1);
  if (!(lmax > 0.0) || evals(0) <= lmax * 1e-12) {
    int bi = 0, bj = 0;
    double worst = -1.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = i + 1; j < p; ++j) {
        const double denom = std::abs(rm(i, i)) * std::abs(rm(j, j));
        const double coh = denom > 0.0 ? abs2(rm(i, j)) / denom : 1.0;
        if (coh > worst) {
          worst = coh;
          bi = static_cast<int>(i);
          bj = static_cast<int>(j);
        }
      }
    }
    throw CollidingTapsError(bi, bj);
  }

  Eigen::VectorXcd proj = es.eigenvectors().adjoint() * wv;
  for (Eigen::Index i = 0; i < p; ++i) proj(i) /= evals(i);
  Eigen::VectorXcd sol = es.eigenvectors() * proj;

  const double wnorm = wv.norm();
  if ((rm * sol - wv).norm() > 1e-8 * wnorm + 1e-300) {
    throw std::runtime_error("amplitude solve did not meet the residual bound");
  }
  return {sol.data(), sol.data() + p};
}

EstimateSet initial_estimate(const OfdmConfig& cfg, const SymbolGrid& y,
                             const SymbolGrid& x, const EstimatorOptions& opts,
                             const SearchRegion& region) {
  cfg.validate();
  opts.validate();
  region.validate();
  const DomainGrids dg = make_domain(y, x, opts.domain);
  const SymbolGrid& yy = *dg.y;
  const SymbolGrid& xx = *dg.x;

  EstimateSet est;
  SymbolGrid resid = yy;
  est.residual_trace.push_back(resid.squared_norm());

  PeakScratch scr;
  std::vector<cd> psi_store, phi_store, accum;
  std::vector<double> taus, nus;
  std::vector<cd> amps;
  AmbiguityCache cache(cfg);

  for (int p = 0; p < opts.num_taps; ++p) {
    const cd* g = domain_grid(cfg, resid, xx, EstimatorDomain::MatchedY, scr);
    const PeakResult pk = search_peak(cfg, g, region, scr);
    est.grid_densified = est.grid_densified || pk.densified;
    taus.push_back(pk.tau);
    nus.push_back(pk.nu);

    const std::vector<cd> r = opts.validate_gram
                                  ? gram_from_columns(cfg, xx, taus, nus)
                                  : gram_matrix(cfg, taus, nus, &cache);
    const std::vector<cd> w = correlation_vector(cfg, yy, xx, taus, nus);
    std::vector<cd> solved = ls_amplitudes(r, w);

    if (opts.min_amplitude.has_value() &&
        std::abs(solved.back()) < *opts.min_amplitude) {
      taus.pop_back();
      nus.pop_back();
      break;  // gains for the first p taps stay at the previous joint solve
    }
    amps = std::move(solved);
    est.taps = zip_taps(amps, taus, nus);
    subtract_taps(cfg, yy, xx, est.taps, -1, resid, psi_store, phi_store, accum);
    est.residual_trace.push_back(resid.squared_norm());
  }
  est.taps = zip_taps(amps, taus, nus);
  return est;
}

EstimateSet refine(const OfdmConfig& cfg, const SymbolGrid& y, const SymbolGrid& x,
                   const EstimateSet& initial, const EstimatorOptions& opts,
                   const SearchRegion& region) {
  cfg.validate();
  opts.validate();
  region.validate();
  EstimateSet est = initial;
  est.refine_iters_used = 0;
  if (opts.refine_iterations == 0 || initial.taps.empty()) return est;

  const DomainGrids dg = make_domain(y, x, opts.domain);
  const SymbolGrid& yy = *dg.y;
  const SymbolGrid& xx = *dg.x;
  const int p = static_cast<int>(initial.taps.size());

  PeakScratch scr;
  std::vector<cd> psi_store, phi_store, accum;
  SymbolGrid resid(cfg.symbols, cfg.subcarriers);
  AmbiguityCache cache(cfg);
  std::vector<double> taus(p), nus(p);

  const auto residual2 = [&](const std::vector<TapEstimate>& taps) {
    subtract_taps(cfg, yy, xx, taps, -1, resid, psi_store, phi_store, accum);
    return resid.squared_norm();
  };

  std::vector<TapEstimate> cur = initial.taps;
  std::vector<TapEstimate> best = cur;
  double best_res = residual2(cur);
  double prev_res = best_res;

  for (int sweep = 1; sweep <= opts.refine_iterations; ++sweep) {
    const std::vector<TapEstimate> prev = cur;
    for (int i = 0; i < p; ++i) {
      subtract_taps(cfg, yy, xx, prev, i, resid, psi_store, phi_store, accum);
      const cd* g = domain_grid(cfg, resid, xx, EstimatorDomain::MatchedY, scr);
      const PeakResult pk = search_peak(cfg, g, region, scr);
      est.grid_densified = est.grid_densified || pk.densified;
      cur[i].delay = pk.tau;
      cur[i].doppler = pk.nu;
    }
    for (int i = 0; i < p; ++i) {
      taus[i] = cur[i].delay;
      nus[i] = cur[i].doppler;
    }
    const std::vector<cd> r = opts.validate_gram
                                  ? gram_from_columns(cfg, xx, taus, nus)
                                  : gram_matrix(cfg, taus, nus, &cache);
    const std::vector<cd> w = correlation_vector(cfg, yy, xx, taus, nus);
    const std::vector<cd> amps = ls_amplitudes(r, w);
    for (int i = 0; i < p; ++i) cur[i].gain = amps[i];

    const double res = residual2(cur);
    est.residual_trace.push_back(res);
    est.refine_iters_used = sweep;
    if (res < best_res) {
      best_res = res;
      best = cur;
    }
    if (opts.early_stop_tol.has_value()) {
      const double improvement = (prev_res - res) / std::max(prev_res, 1e-300);
      prev_res = res;
      if (improvement < *opts.early_stop_tol) break;
    } else {
      prev_res = res;
    }
  }
  est.taps = opts.early_stop_tol.has_value() ? best : cur;
  return est;
}

CrlbBounds crlb_single_tap(const OfdmConfig& cfg, double sigma2, double gain_power) {
  cfg.validate();
  if (!(gain_power > 0.0)) throw std::invalid_argument("gain_power must be positive");
  if (sigma2 < 0.0) throw std::invalid_argument("sigma2 must be >= 0");
  const double k = cfg.subcarriers, l = cfg.symbols;
  const double common =
      6.0 * sigma2 / (4.0 * std::numbers::pi * std::numbers::pi * k * l * gain_power);
  CrlbBounds b;
  b.var_nu_td = common / (l * l - 1.0);
  b.var_tau_over_t = common / (k * k - 1.0);
  return b;
}

}  // namespace ofdmtap
