#pragma once

#include <cstdint>

namespace stratawalk {

// splitmix64 finalizer: full-avalanche bijection of the value.
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  return splitmix64_mix(state);
}

// Counter-based stream: the state is a pure function of (seed, stream, salt),
// so any (seed, n) pair can be queried lazily, in any order, on any thread,
// with bit-identical output.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::int64_t stream, std::uint64_t salt = 0) {
    std::uint64_t s = seed ^ (salt * 0xD6E8FEB86659FD93ull);
    s ^= 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(stream) + 0x3C79AC492BA7B653ull;
    // The key must be fully avalanched before streaming: adjacent streams
    // differ by one golden-ratio step, and a single finalizer round over that
    // orbit leaves adjacent-level correlations.
    state_ = splitmix64_mix(splitmix64_mix(s));
  }

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  // Uniform in [0, 1), 53 random bits.
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [-1, 1).
  double next_signed() { return next_double() * 2.0 - 1.0; }

 private:
  std::uint64_t state_;
};

// Deterministic per-walk seed split of a base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  const std::uint64_t s = base ^ (0xA24BAED4963EE407ull * (index + 1));
  return splitmix64_mix(splitmix64_mix(s));
}

}  // namespace stratawalk
