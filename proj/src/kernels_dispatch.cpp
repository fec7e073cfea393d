#include <atomic>
#include <stdexcept>

#include "ofdmtap/kernels.hpp"

namespace ofdmtap::kernels {
namespace {

const Ops* pick(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return &scalar_ops();
    case Backend::Avx2:
#if OFDMTAP_HAVE_AVX2
      if (cpu_has_avx2()) return &avx2_ops();
#endif
      return nullptr;
    case Backend::Auto:
#if OFDMTAP_HAVE_AVX2
      if (cpu_has_avx2()) return &avx2_ops();
#endif
      return &scalar_ops();
  }
  return nullptr;
}

std::atomic<const Ops*> g_active{nullptr};

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

void select_backend(Backend b) {
  const Ops* ops = pick(b);
  if (ops == nullptr) {
    throw std::invalid_argument("requested kernel backend is not supported on this host");
  }
  g_active.store(ops, std::memory_order_release);
}

const Ops& active() {
  const Ops* p = g_active.load(std::memory_order_acquire);
  if (p == nullptr) {
    p = pick(Backend::Auto);
    g_active.store(p, std::memory_order_release);
  }
  return *p;
}

Backend selected_backend() {
  return &active() == &scalar_ops() ? Backend::Scalar : Backend::Avx2;
}

}  // namespace ofdmtap::kernels
