#include "ofdmtap/kernels.hpp"

// Reference kernels. Explicit real/imag arithmetic throughout: std::complex
// operator* lowers to __muldc3 at -O2, which is a function call per product.

namespace ofdmtap::kernels {
namespace {

cd dotc_scalar(const cd* a, const cd* b, std::size_t n) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    re += ar * br + ai * bi;
    im += ar * bi - ai * br;
  }
  return {re, im};
}

cd dotu_scalar(const cd* a, const cd* b, std::size_t n) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    re += ar * br - ai * bi;
    im += ar * bi + ai * br;
  }
  return {re, im};
}

void hadamard_conj_scalar(cd* out, const cd* a, const cd* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    out[i] = {ar * br + ai * bi, ai * br - ar * bi};
  }
}

void hadamard_scalar(cd* out, const cd* a, const cd* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    out[i] = {ar * br - ai * bi, ar * bi + ai * br};
  }
}

void axpy_scalar(cd* acc, cd alpha, const cd* x, std::size_t n) {
  const double cr = alpha.real(), ci = alpha.imag();
  for (std::size_t i = 0; i < n; ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    acc[i] += cd{cr * xr - ci * xi, cr * xi + ci * xr};
  }
}

void mulsub_scalar(cd* out, const cd* y, const cd* t, const cd* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double tr = t[i].real(), ti = t[i].imag();
    const double xr = x[i].real(), xi = x[i].imag();
    out[i] = {y[i].real() - (tr * xr - ti * xi), y[i].imag() - (tr * xi + ti * xr)};
  }
}

double sum_abs2_scalar(const cd* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += a[i].real() * a[i].real() + a[i].imag() * a[i].imag();
  }
  return s;
}

constexpr Ops kScalarOps = {
    "scalar",        dotc_scalar, dotu_scalar,   hadamard_conj_scalar,
    hadamard_scalar, axpy_scalar, mulsub_scalar, sum_abs2_scalar,
};

}  // namespace

const Ops& scalar_ops() { return kScalarOps; }

}  // namespace ofdmtap::kernels
