#pragma once

// Counter-based random numbers (Philox4x32-10).  Every draw is a pure
// function of (seed, stream, step, slot), so a trajectory's increments do
// not depend on which worker simulates it or in what order.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace slns {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      ctr = single_round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Random stream of one trajectory.  Slots index independent draws inside a
/// step: slots [0, kUniformSlot) feed Gaussian increments, slots from
/// kUniformSlot on feed uniforms (bridge crossing tests).
class RngStream {
 public:
  static constexpr std::uint32_t kUniformSlot = 16;

  RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Two uniforms in [0, 1) with 53 random bits each.
  std::array<double, 2> uniform_pair(std::uint64_t step, std::uint32_t slot) const {
    const auto r = block(step, slot);
    return {to_unit(r[0], r[1]), to_unit(r[2], r[3])};
  }

  double uniform(std::uint64_t step, std::uint32_t index) const {
    return uniform_pair(step, kUniformSlot + index / 2)[index % 2];
  }

  /// Standard normal number `index` of a step (Box-Muller on slot index/2).
  double normal(std::uint64_t step, std::uint32_t index) const {
    return normal_pair(step, index / 2)[index % 2];
  }

  std::array<double, 2> normal_pair(std::uint64_t step, std::uint32_t slot) const {
    const auto u = uniform_pair(step, slot);
    const double radius = std::sqrt(-2.0 * std::log1p(-u[0]));  // 1-u in (0,1]
    const double angle = 2.0 * std::numbers::pi * u[1];
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

 private:
  Philox4x32::Counter block(std::uint64_t step, std::uint32_t slot) const {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(step),
                                  static_cast<std::uint32_t>(step >> 32) ^ (slot << 24),
                                  static_cast<std::uint32_t>(stream_id_),
                                  static_cast<std::uint32_t>(stream_id_ >> 32)};
    const Philox4x32::Key key{static_cast<std::uint32_t>(seed_),
                              static_cast<std::uint32_t>(seed_ >> 32)};
    return Philox4x32::generate(ctr, key);
  }

  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
};

/// Mixes an experiment seed with a sub-problem tag (snapshot index, point
/// index) into an independent seed.  SplitMix64 finalizer.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace slns
