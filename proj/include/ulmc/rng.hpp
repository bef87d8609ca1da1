#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "ulmc/linalg.hpp"

namespace ulmc {

/// Philox4x32-10 counter-based generator (Salmon et al. reference constants).
///
/// Purely functional: a (key, counter) pair maps to four 32-bit words. Streams
/// are carved out of the counter space as
///   key     = (seed_lo, seed_hi)
///   counter = (block, chain, step_lo, step_hi)
/// so every (seed, chain, step) owns 2^32 blocks of four words, and draws are
/// bitwise reproducible regardless of thread count or evaluation order.
struct Philox4x32 {
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter c, Key k) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t(kMul0) * c[0];
      const std::uint64_t p1 = std::uint64_t(kMul1) * c[2];
      const auto hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
      const auto hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
      c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    return c;
  }
};

/// Uniform strictly inside (0, 1): 52 random bits with a half-step offset,
/// so both endpoints are unreachable even after rounding (log-safe).
inline double u64_to_unit_double(std::uint64_t u) {
  return (double(u >> 12) + 0.5) * 0x1.0p-52;
}

/// Deterministic stream of N(0,1) draws addressed by (seed, chain, step, index).
///
/// Each Philox block yields two uniforms (two 32-bit words each) which
/// Box-Muller turns into two normals, so index i lives in block i/2.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint32_t chain) : seed_(seed), chain_(chain) {}

  std::uint64_t seed() const { return seed_; }
  std::uint32_t chain() const { return chain_; }

  /// idx-th standard normal of the (chain, step) substream.
  double normal(std::uint64_t step, std::uint32_t idx) const {
    const auto words = raw_block(step, idx / 2);
    const double u1 =
        u64_to_unit_double((std::uint64_t(words[0]) << 32) | words[1]);
    const double u2 =
        u64_to_unit_double((std::uint64_t(words[2]) << 32) | words[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    return (idx % 2 == 0) ? r * std::cos(theta) : r * std::sin(theta);
  }

  /// idx-th uniform in (0,1) of the (chain, step) substream.
  double uniform(std::uint64_t step, std::uint32_t idx) const {
    const auto words = raw_block(step, idx / 2);
    const std::uint32_t lo = words[2 * (idx % 2)];
    const std::uint32_t hi = words[2 * (idx % 2) + 1];
    return u64_to_unit_double((std::uint64_t(lo) << 32) | hi);
  }

  /// Fills `out` with normals idx = 0..size-1 at the given step.
  template <class S>
  void fill_normal(std::uint64_t step, Vec<S>& out) const {
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      out[i] = S(normal(step, std::uint32_t(i)));
    }
  }

  Philox4x32::Counter raw_block(std::uint64_t step, std::uint32_t block) const {
    const Philox4x32::Key key = {std::uint32_t(seed_), std::uint32_t(seed_ >> 32)};
    const Philox4x32::Counter ctr = {block, chain_, std::uint32_t(step),
                                     std::uint32_t(step >> 32)};
    return Philox4x32::block(ctr, key);
  }

 private:
  std::uint64_t seed_;
  std::uint32_t chain_;
};

}  // namespace ulmc
