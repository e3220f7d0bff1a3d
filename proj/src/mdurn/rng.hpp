#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

// Self-contained random number generation. The project does not use
// std::uniform_int_distribution or other distribution adaptors from the
// standard library because their output is implementation-defined; every
// draw here is reproducible bit-for-bit from (master seed, stream path)
// across platforms and releases.
//
// Stream derivation scheme (stable, documented):
//   urn stream of replication r:            derive_seed(master, {STREAM_URN, r})
//   reinforcement substream at step n:      derive_seed(master, {STREAM_REINFORCEMENT, r, n})
//   sub-master of power-curve grid point i: derive_seed(master, {STREAM_POWER_POINT, i})
//
// The reinforcement substream is keyed by the step index alone (besides the
// master seed and replication id), never by the urn state, so reinforcement
// draws cannot depend on anything the urn has done.

namespace mdurn {

inline constexpr std::uint64_t kStreamUrn = 1;
inline constexpr std::uint64_t kStreamReinforcement = 2;
inline constexpr std::uint64_t kStreamPowerPoint = 3;

// SplitMix64 step (Vigna); used for seed expansion and key mixing.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Collapses (master, path...) into one 64-bit key. Order-sensitive.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = master;
  std::uint64_t k = splitmix64(h);
  for (std::uint64_t component : path) {
    h = k ^ (component + 0x9e3779b97f4a7c15ULL + (k << 6) + (k >> 2));
    k = splitmix64(h);
  }
  return k;
}

// xoshiro256** 1.0 (Blackman/Vigna), seeded through SplitMix64.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> state_;
};

// Unbiased integer in [0, bound) via Lemire's multiply-with-rejection.
inline std::uint64_t uniform_below(Xoshiro256& rng, std::uint64_t bound) {
  std::uint64_t x = rng();
  unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      x = rng();
      m = static_cast<unsigned __int128>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Xoshiro256& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace mdurn
