#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace adafilter {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// Every draw is addressed by (seed, stream, step, lane); nothing is carried
/// between draws, so any subset of a simulation can be regenerated exactly
/// and work can be split across threads without changing the output.
/// Counter layout: {step, lane, stream low word, stream high word}; the
/// 64-bit seed is the key.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Block generate(Block counter, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * counter[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * counter[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      counter = {hi1 ^ counter[1] ^ key[0], lo1, hi0 ^ counter[3] ^ key[1], lo0};
    }
    return counter;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

// Named streams. Trajectory t of a seed uses stream kTrajectoryBase + t.
inline constexpr std::uint64_t kTrajectoryStreamBase = 0;
inline constexpr std::uint64_t kParticleInitStream = 0x5046'0000'0000'0001ull;
inline constexpr std::uint64_t kParticleMoveStream = 0x5046'0000'0000'0002ull;
inline constexpr std::uint64_t kParticleResampleStream = 0x5046'0000'0000'0003ull;

class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  constexpr Philox4x32::Block block(std::uint64_t stream, std::uint32_t step,
                                    std::uint32_t lane) const noexcept {
    return Philox4x32::generate(
        {step, lane, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)},
        key_);
  }

  // Two uniforms in [0, 1) with 53 random bits each.
  std::array<double, 2> uniforms(std::uint64_t stream, std::uint32_t step,
                                 std::uint32_t lane) const noexcept {
    const auto b = block(stream, step, lane);
    return {to_unit(b[0], b[1]), to_unit(b[2], b[3])};
  }

  double uniform(std::uint64_t stream, std::uint32_t step, std::uint32_t lane) const noexcept {
    return uniforms(stream, step, lane)[0];
  }

  // Box-Muller on one block; the first uniform is shifted into (0, 1].
  double standard_normal(std::uint64_t stream, std::uint32_t step,
                         std::uint32_t lane) const noexcept {
    const auto [u0, u1] = uniforms(stream, step, lane);
    const double radius = std::sqrt(-2.0 * std::log(1.0 - u0));
    return radius * std::cos(2.0 * std::numbers::pi * u1);
  }

 private:
  static constexpr double to_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = (std::uint64_t{hi} << 32 | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
  }

  Philox4x32::Key key_;
};

}  // namespace adafilter
