#pragma once

#include <cstdint>

namespace btf {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Hash of a 2D integer lattice point under a seed. Stable across versions:
/// h = mix64(mix64(mix64(seed) ^ i) ^ j) with i, j as two's-complement u64.
constexpr std::uint64_t lattice_hash(std::int64_t i, std::int64_t j, std::uint64_t seed) {
  return mix64(mix64(mix64(seed) ^ std::uint64_t(i)) ^ std::uint64_t(j));
}

/// Top 53 bits as a double in [0, 1).
constexpr double to_unit(std::uint64_t h) { return double(h >> 11) * 0x1.0p-53; }

}  // namespace btf
