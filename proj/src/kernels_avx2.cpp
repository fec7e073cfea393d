#include "ofdmtap/kernels.hpp"

// AVX2+FMA variants. This translation unit is compiled with -mavx2 -mfma and
// must only contain code reached after a cpu_has_avx2() check (the dispatcher
// guarantees that). Two interleaved complex doubles per __m256d.

#if OFDMTAP_HAVE_AVX2

#include <immintrin.h>

namespace ofdmtap::kernels {
namespace {

// a * b for two packed complex doubles
inline __m256d cmul_pd(__m256d a, __m256d b) {
  const __m256d b_re = _mm256_movedup_pd(b);
  const __m256d b_im = _mm256_unpackhi_pd(b, b);
  const __m256d a_sw = _mm256_permute_pd(a, 0x5);
  return _mm256_fmaddsub_pd(a, b_re, _mm256_mul_pd(a_sw, b_im));
}

// a * conj(b)
inline __m256d cmul_conjb_pd(__m256d a, __m256d b) {
  const __m256d b_re = _mm256_movedup_pd(b);
  const __m256d b_im = _mm256_unpackhi_pd(b, b);
  const __m256d a_sw = _mm256_permute_pd(a, 0x5);
  return _mm256_fmsubadd_pd(a, b_re, _mm256_mul_pd(a_sw, b_im));
}

inline cd hsum_complex(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  alignas(16) double out[2];
  _mm_store_pd(out, s);
  return {out[0], out[1]};
}

inline __m256d negate_pd(__m256d v) {
  return _mm256_xor_pd(v, _mm256_set1_pd(-0.0));
}

// Shared accumulation for both dot products:
//   P lanes hold sum(ar*br) / sum(ai*br), Q lanes hold sum(ai*bi) / sum(ar*bi).
inline void dot_accumulate(const double* pa, const double* pb, std::size_t n_cplx,
                           __m256d& p_out, __m256d& q_out, std::size_t& done) {
  __m256d p0 = _mm256_setzero_pd(), p1 = p0, p2 = p0, p3 = p0;
  __m256d q0 = p0, q1 = p0, q2 = p0, q3 = p0;
  std::size_t i = 0;
  for (; i + 8 <= n_cplx; i += 8) {
    const __m256d a0 = _mm256_loadu_pd(pa + 2 * i);
    const __m256d b0 = _mm256_loadu_pd(pb + 2 * i);
    const __m256d a1 = _mm256_loadu_pd(pa + 2 * i + 4);
    const __m256d b1 = _mm256_loadu_pd(pb + 2 * i + 4);
    const __m256d a2 = _mm256_loadu_pd(pa + 2 * i + 8);
    const __m256d b2 = _mm256_loadu_pd(pb + 2 * i + 8);
    const __m256d a3 = _mm256_loadu_pd(pa + 2 * i + 12);
    const __m256d b3 = _mm256_loadu_pd(pb + 2 * i + 12);
    p0 = _mm256_fmadd_pd(a0, _mm256_movedup_pd(b0), p0);
    q0 = _mm256_fmadd_pd(_mm256_permute_pd(a0, 0x5), _mm256_unpackhi_pd(b0, b0), q0);
    p1 = _mm256_fmadd_pd(a1, _mm256_movedup_pd(b1), p1);
    q1 = _mm256_fmadd_pd(_mm256_permute_pd(a1, 0x5), _mm256_unpackhi_pd(b1, b1), q1);
    p2 = _mm256_fmadd_pd(a2, _mm256_movedup_pd(b2), p2);
    q2 = _mm256_fmadd_pd(_mm256_permute_pd(a2, 0x5), _mm256_unpackhi_pd(b2, b2), q2);
    p3 = _mm256_fmadd_pd(a3, _mm256_movedup_pd(b3), p3);
    q3 = _mm256_fmadd_pd(_mm256_permute_pd(a3, 0x5), _mm256_unpackhi_pd(b3, b3), q3);
  }
  for (; i + 2 <= n_cplx; i += 2) {
    const __m256d a0 = _mm256_loadu_pd(pa + 2 * i);
    const __m256d b0 = _mm256_loadu_pd(pb + 2 * i);
    p0 = _mm256_fmadd_pd(a0, _mm256_movedup_pd(b0), p0);
    q0 = _mm256_fmadd_pd(_mm256_permute_pd(a0, 0x5), _mm256_unpackhi_pd(b0, b0), q0);
  }
  p_out = _mm256_add_pd(_mm256_add_pd(p0, p1), _mm256_add_pd(p2, p3));
  q_out = _mm256_add_pd(_mm256_add_pd(q0, q1), _mm256_add_pd(q2, q3));
  done = i;
}

cd dotc_avx2(const cd* a, const cd* b, std::size_t n) {
  const double* pa = reinterpret_cast<const double*>(a);
  const double* pb = reinterpret_cast<const double*>(b);
  __m256d p, q;
  std::size_t i = 0;
  dot_accumulate(pa, pb, n, p, q, i);
  // conj(a)*b: re lanes = P + Q, im lanes = Q - P
  const cd v = hsum_complex(_mm256_addsub_pd(q, negate_pd(p)));
  double re = v.real(), im = v.imag();
  for (; i < n; ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    re += ar * br + ai * bi;
    im += ar * bi - ai * br;
  }
  return {re, im};
}

cd dotu_avx2(const cd* a, const cd* b, std::size_t n) {
  const double* pa = reinterpret_cast<const double*>(a);
  const double* pb = reinterpret_cast<const double*>(b);
  __m256d p, q;
  std::size_t i = 0;
  dot_accumulate(pa, pb, n, p, q, i);
  // a*b: re lanes = P - Q, im lanes = P + Q
  const cd v = hsum_complex(_mm256_addsub_pd(p, q));
  double re = v.real(), im = v.imag();
  for (; i < n; ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    re += ar * br - ai * bi;
    im += ar * bi + ai * br;
  }
  return {re, im};
}

void hadamard_conj_avx2(cd* out, const cd* a, const cd* b, std::size_t n) {
  double* po = reinterpret_cast<double*>(out);
  const double* pa = reinterpret_cast<const double*>(a);
  const double* pb = reinterpret_cast<const double*>(b);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    _mm256_storeu_pd(po + 2 * i, cmul_conjb_pd(_mm256_loadu_pd(pa + 2 * i),
                                               _mm256_loadu_pd(pb + 2 * i)));
  }
  for (; i < n; ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    out[i] = {ar * br + ai * bi, ai * br - ar * bi};
  }
}

void hadamard_avx2(cd* out, const cd* a, const cd* b, std::size_t n) {
  double* po = reinterpret_cast<double*>(out);
  const double* pa = reinterpret_cast<const double*>(a);
  const double* pb = reinterpret_cast<const double*>(b);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    _mm256_storeu_pd(po + 2 * i, cmul_pd(_mm256_loadu_pd(pa + 2 * i),
                                         _mm256_loadu_pd(pb + 2 * i)));
  }
  for (; i < n; ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    out[i] = {ar * br - ai * bi, ar * bi + ai * br};
  }
}

void axpy_avx2(cd* acc, cd alpha, const cd* x, std::size_t n) {
  double* pa = reinterpret_cast<double*>(acc);
  const double* px = reinterpret_cast<const double*>(x);
  const __m256d c_re = _mm256_set1_pd(alpha.real());
  const __m256d c_im = _mm256_set1_pd(alpha.imag());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d v = _mm256_loadu_pd(px + 2 * i);
    const __m256d t = _mm256_mul_pd(_mm256_permute_pd(v, 0x5), c_im);
    const __m256d prod = _mm256_fmaddsub_pd(v, c_re, t);
    _mm256_storeu_pd(pa + 2 * i, _mm256_add_pd(_mm256_loadu_pd(pa + 2 * i), prod));
  }
  const double cr = alpha.real(), ci = alpha.imag();
  for (; i < n; ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    acc[i] += cd{cr * xr - ci * xi, cr * xi + ci * xr};
  }
}

void mulsub_avx2(cd* out, const cd* y, const cd* t, const cd* x, std::size_t n) {
  double* po = reinterpret_cast<double*>(out);
  const double* py = reinterpret_cast<const double*>(y);
  const double* pt = reinterpret_cast<const double*>(t);
  const double* px = reinterpret_cast<const double*>(x);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d prod = cmul_pd(_mm256_loadu_pd(pt + 2 * i), _mm256_loadu_pd(px + 2 * i));
    _mm256_storeu_pd(po + 2 * i, _mm256_sub_pd(_mm256_loadu_pd(py + 2 * i), prod));
  }
  for (; i < n; ++i) {
    const double tr = t[i].real(), ti = t[i].imag();
    const double xr = x[i].real(), xi = x[i].imag();
    out[i] = {y[i].real() - (tr * xr - ti * xi), y[i].imag() - (tr * xi + ti * xr)};
  }
}

double sum_abs2_avx2(const cd* a, std::size_t n) {
  const double* pa = reinterpret_cast<const double*>(a);
  __m256d s0 = _mm256_setzero_pd(), s1 = s0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v0 = _mm256_loadu_pd(pa + 2 * i);
    const __m256d v1 = _mm256_loadu_pd(pa + 2 * i + 4);
    s0 = _mm256_fmadd_pd(v0, v0, s0);
    s1 = _mm256_fmadd_pd(v1, v1, s1);
  }
  for (; i + 2 <= n; i += 2) {
    const __m256d v0 = _mm256_loadu_pd(pa + 2 * i);
    s0 = _mm256_fmadd_pd(v0, v0, s0);
  }
  const cd partial = hsum_complex(_mm256_add_pd(s0, s1));
  double s = partial.real() + partial.imag();
  for (; i < n; ++i) {
    s += a[i].real() * a[i].real() + a[i].imag() * a[i].imag();
  }
  return s;
}

constexpr Ops kAvx2Ops = {
    "avx2",        dotc_avx2, dotu_avx2,   hadamard_conj_avx2,
    hadamard_avx2, axpy_avx2, mulsub_avx2, sum_abs2_avx2,
};

}  // namespace

const Ops& avx2_ops() { return kAvx2Ops; }

}  // namespace ofdmtap::kernels

#endif  // OFDMTAP_HAVE_AVX2
