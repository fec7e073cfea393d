#pragma once

#include <cstdint>
#include <random>

namespace ofdmtap {

/// The one generator type used everywhere. Every stochastic operation takes
/// an explicit seed, so results are reproducible and trials can run in
/// parallel without shared state.
using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a base seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream));
}

/// Per-trial seed for a Monte Carlo sweep: base seed combined with the SNR
/// index and trial index, so sweeps are reproducible and order-independent.
constexpr std::uint64_t trial_seed(std::uint64_t base, std::size_t snr_index,
                                   std::size_t trial) {
  return mix_seed(base, (std::uint64_t{snr_index} << 40) ^ (trial + 1));
}

}  // namespace ofdmtap
