#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pcd {

// All randomness goes through mt19937_64 plus the helpers below so that
// sequences are identical across standard library implementations
// (std::*_distribution output is implementation-defined).
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent stream seed for `stream` under `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// Uniform on the open interval (0, 1).
inline double uniform_open01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform_in(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_open01(rng);
}

// Exp(rate) sample by inversion; strictly positive.
inline double exponential_sample(Rng& rng, double rate) {
  return -std::log(uniform_open01(rng)) / rate;
}

}  // namespace pcd
