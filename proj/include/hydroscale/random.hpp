#ifndef HYDROSCALE_RANDOM_HPP
#define HYDROSCALE_RANDOM_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace hydroscale
{

/**
 * Philox4x32-10 counter-based generator (Salmon et al., SC'11).
 *
 * The 64-bit seed is the key; the 128-bit counter is split into a 64-bit
 * block index and a 64-bit stream id, so every (seed, stream) pair names an
 * independent sequence without any shared state.
 */
class Philox4x32
{
public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) noexcept
  {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// One reproducible stream; satisfies UniformRandomBitGenerator.
class RandomStream
{
public:
  using result_type = std::uint32_t;

  RandomStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream_id)
  {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept
  {
    if (pos_ == 4) refill();
    return buffer_[pos_++];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept
  {
    const std::uint64_t hi = (*this)() >> 5;  // 27 bits
    const std::uint64_t lo = (*this)() >> 6;  // 26 bits
    return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
  }

  /// Exponential waiting time with the given rate (> 0).
  double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }

  bool bernoulli(double p) noexcept { return uniform() < p; }

private:
  void refill() noexcept
  {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                  static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    buffer_ = Philox4x32::block(ctr, key_);
    ++block_;
    pos_ = 0;
  }

  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buffer_{};
  int pos_ = 4;
};

/// Stream ids used by the simulation drivers: one for the initial state, one for the dynamics.
inline constexpr std::uint64_t initial_state_stream(std::uint64_t replicate) noexcept { return 2 * replicate; }
inline constexpr std::uint64_t dynamics_stream(std::uint64_t replicate) noexcept { return 2 * replicate + 1; }

}  // namespace hydroscale

#endif  // HYDROSCALE_RANDOM_HPP
