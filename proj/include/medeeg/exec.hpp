#pragma once

#include <cstdint>

namespace medeeg {

// Selects between the OpenMP kernel and its serial reference. Both paths are
// deterministic; the parallel path never depends on the thread count.
enum class Exec { Serial, Parallel };

// splitmix64 step, used to derive independent child seeds from a master seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace medeeg
