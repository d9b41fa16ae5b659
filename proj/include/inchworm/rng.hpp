#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace inchworm {

// SplitMix64 step; used to expand seeds and to hash stream tags.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256++ (Blackman & Vigna). Satisfies UniformRandomBitGenerator so it
// plugs into <random> distributions; uniform01() is the fast path used by the
// Monte Carlo kernels.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Xoshiro256pp(std::uint64_t seed = 0x853c49e6748fea9bULL) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    ++draws_;
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Number of 64-bit outputs consumed so far.
  std::uint64_t draws() const { return draws_; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4]{};
  std::uint64_t draws_ = 0;
};

using Rng = Xoshiro256pp;

// Independent stream keyed by a master seed and a tuple of integer tags
// (replication index, grid node, stage, ...). Equal keys give equal streams,
// regardless of the order in which streams are created.
inline Rng derive_stream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t state = master_seed;
  std::uint64_t key = splitmix64(state);
  for (std::uint64_t tag : tags) {
    state = key ^ (tag + 0x632be59bd9b4e019ULL);
    key = splitmix64(state);
  }
  return Rng(key);
}

}  // namespace inchworm
