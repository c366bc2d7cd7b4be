#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace roughdelay {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A block is a
/// pure function of (counter, key), so any draw of any stream can be
/// reproduced without replaying the others.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(Key key) : key_(key) {}

  Counter operator()(Counter ctr) const {
    Key key = key_;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      ctr = single_round(ctr, key);
    }
    return ctr;
  }

 private:
  static Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
    const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }

  Key key_;
};

/// Standard normal deviates for the stream (seed, trial, component).
///
/// Draw j uses Philox block counter (j / 2, component, trial_lo, trial_hi)
/// under key (seed_lo, seed_hi). The block's four words form two 64-bit
/// integers w0, w1; u_i = ((w_i >> 11) + 0.5) / 2^53 lies in (0, 1), and the
/// Box-Muller pair r cos(2 pi u1), r sin(2 pi u1) with r = sqrt(-2 ln u0)
/// gives draws 2k and 2k + 1.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t trial, std::uint32_t component)
      : gen_({static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}),
        component_(component),
        trial_lo_(static_cast<std::uint32_t>(trial)),
        trial_hi_(static_cast<std::uint32_t>(trial >> 32)) {}

  std::array<double, 2> pair(std::uint32_t block) const {
    const auto w = gen_({block, component_, trial_lo_, trial_hi_});
    const std::uint64_t w0 = (std::uint64_t{w[0]} << 32) | w[1];
    const std::uint64_t w1 = (std::uint64_t{w[2]} << 32) | w[3];
    constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
    const double u0 = (static_cast<double>(w0 >> 11) + 0.5) * scale;
    const double u1 = (static_cast<double>(w1 >> 11) + 0.5) * scale;
    const double r = std::sqrt(-2.0 * std::log(u0));
    const double angle = 2.0 * std::numbers::pi * u1;
    return {r * std::cos(angle), r * std::sin(angle)};
  }

  double operator()(std::uint64_t j) const { return pair(static_cast<std::uint32_t>(j / 2))[j % 2]; }

  void fill(std::span<double> out) const {
    for (std::size_t j = 0; j < out.size(); j += 2) {
      const auto p = pair(static_cast<std::uint32_t>(j / 2));
      out[j] = p[0];
      if (j + 1 < out.size()) out[j + 1] = p[1];
    }
  }

 private:
  Philox4x32 gen_;
  std::uint32_t component_;
  std::uint32_t trial_lo_;
  std::uint32_t trial_hi_;
};

/// Uniform deviates in (0, 1) from the same generator, used for test-point
/// selection (random triples, seeded sigma points).
class UniformStream {
 public:
  UniformStream(std::uint64_t seed, std::uint32_t stream)
      : gen_({static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}), stream_(stream) {}

  double operator()(std::uint64_t j) const {
    const auto w = gen_({static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(j >> 32), stream_, 0x5eedu});
    const std::uint64_t bits = (std::uint64_t{w[0]} << 32) | w[1];
    return (static_cast<double>(bits >> 11) + 0.5) / 9007199254740992.0;
  }

  /// Uniform integer in [lo, hi].
  std::int64_t integer(std::uint64_t j, std::int64_t lo, std::int64_t hi) const {
    const auto span = static_cast<double>(hi - lo + 1);
    auto v = lo + static_cast<std::int64_t>((*this)(j) * span);
    return v > hi ? hi : v;
  }

 private:
  Philox4x32 gen_;
  std::uint32_t stream_;
};

}  // namespace roughdelay
