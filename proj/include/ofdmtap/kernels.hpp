#pragma once

#include <complex>
#include <cstddef>
#include <string_view>

namespace ofdmtap::kernels {

using cd = std::complex<double>;

/// Dispatch table for the complex array primitives underneath all grid math.
/// Two implementations exist: a portable scalar reference and an AVX2+FMA
/// variant on x86-64. Both compute the same quantities; they may differ in
/// summation order, so cross-backend agreement is to rounding, not bitwise.
struct Ops {
  std::string_view name;
  // sum_i conj(a[i]) * b[i]
  cd (*dotc)(const cd* a, const cd* b, std::size_t n);
  // sum_i a[i] * b[i]
  cd (*dotu)(const cd* a, const cd* b, std::size_t n);
  // out[i] = a[i] * conj(b[i])
  void (*hadamard_conj)(cd* out, const cd* a, const cd* b, std::size_t n);
  // out[i] = a[i] * b[i]
  void (*hadamard)(cd* out, const cd* a, const cd* b, std::size_t n);
  // acc[i] += alpha * x[i]
  void (*axpy)(cd* acc, cd alpha, const cd* x, std::size_t n);
  // out[i] = y[i] - t[i] * x[i]
  void (*mulsub)(cd* out, const cd* y, const cd* t, const cd* x, std::size_t n);
  // sum_i |a[i]|^2
  double (*sum_abs2)(const cd* a, std::size_t n);
};

enum class Backend { Auto, Scalar, Avx2 };

const Ops& scalar_ops();
#if OFDMTAP_HAVE_AVX2
const Ops& avx2_ops();
#endif

bool cpu_has_avx2();

/// Selects the backend used by active(). Auto picks the widest supported
/// one. Throws std::invalid_argument when the request cannot be honored on
/// this host. Not intended to be raced against running kernels.
void select_backend(Backend b);

/// Backend currently in effect (never Auto).
Backend selected_backend();

const Ops& active();

}  // namespace ofdmtap::kernels
