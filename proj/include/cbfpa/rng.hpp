#pragma once

#include <cstdint>
#include <random>

namespace cbfpa {

// Derives independent sub-stream seeds from a base seed (splitmix64 step).
// Every module that needs randomness takes an explicit seed so that runs are
// reproducible end to end.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace cbfpa
