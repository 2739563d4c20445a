#pragma once

#include <cstdint>

namespace cvguard {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for the k-th replicate of a sweep: splitmix64(base + k * golden).
inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t k) {
  return splitmix64(base + k * 0x9e3779b97f4a7c15ULL);
}

/// Independent stream for a named subsystem of one run.
inline constexpr std::uint64_t stream_seed(std::uint64_t run_seed, std::uint64_t stream) {
  return splitmix64(run_seed ^ splitmix64(stream));
}

}  // namespace cvguard
