#pragma once

#include <cstdint>
#include <random>

namespace powerdoa {

using RandomEngine = std::mt19937_64;

// splitmix64 finalizer; decorrelates nearby seed values.
inline uint64_t mix_seed(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic sub-stream seed for (master, index). Parallel and sequential
// consumers of indexed streams see identical draws.
inline uint64_t sub_seed(uint64_t master, uint64_t index) {
  return mix_seed(master ^ mix_seed(index + 1));
}

inline uint64_t sub_seed(uint64_t master, uint64_t a, uint64_t b) {
  return sub_seed(sub_seed(master, a), b);
}

inline uint64_t sub_seed(uint64_t master, uint64_t a, uint64_t b, uint64_t c) {
  return sub_seed(sub_seed(master, a, b), c);
}

inline RandomEngine make_engine(uint64_t seed) { return RandomEngine(mix_seed(seed)); }

}  // namespace powerdoa
