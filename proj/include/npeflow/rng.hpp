#pragma once

#include <cstdint>
#include <random>

namespace npeflow {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive well-separated stream seeds from a
// master seed plus integer tags (replicate index, stream id, ...).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(master ^ mix64(a + 0x100 + (b << 20)));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Fresh distribution objects per call: slightly wasteful but keeps draws a pure
// function of generator state (no hidden pair caching across call sites).
inline double randu(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double randn(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace npeflow
