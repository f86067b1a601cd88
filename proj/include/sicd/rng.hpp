#pragma once

#include <bit>
#include <cstdint>
#include <random>

namespace sicd {

// One splitmix64 step: the standard 64-bit finalizer-style mixer.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent deterministic engine for (seed, stream). Streams keyed by
// values (for example a truncation level's bit pattern) stay stable no
// matter what order or subset of streams a caller touches.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed;
  std::uint64_t mixed = splitmix64(state);
  state ^= stream * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
  mixed ^= splitmix64(state);
  return std::mt19937_64(mixed);
}

// Stream id for a real-valued key: the bit pattern, sign-folded so that
// +0.0 and -0.0 agree.
inline std::uint64_t stream_of(double key) {
  return std::bit_cast<std::uint64_t>(key == 0.0 ? 0.0 : key);
}

}  // namespace sicd
