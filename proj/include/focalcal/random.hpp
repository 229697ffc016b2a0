#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace focalcal {

/// Counter-based pseudo-random stream (Philox4x32-10, Salmon et al. 2011).
///
/// The 64-bit seed is the Philox key; the 128-bit counter is split into a
/// 64-bit block counter and a 64-bit stream index, so `(seed, stream)` pairs
/// name independent substreams. All derived variates use explicit bit
/// manipulation instead of `<random>` distributions, whose output is
/// implementation defined, so sequences are identical across platforms.
///
/// A stream is single-owner. Use distinct stream indices for concurrent work.
class RandomStream {
public:
  static constexpr std::string_view algorithm = "philox4x32-10";

  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_index() const { return stream_; }

  /// A new stream with the same seed and the given stream index.
  RandomStream substream(std::uint64_t stream) const { return RandomStream(seed_, stream); }

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);

  /// Uniform integer on [0, n). Unbiased (Lemire's multiply-shift with rejection).
  std::uint64_t uniform_index(std::uint64_t n);

  /// Standard normal via the Box-Muller transform. Draws come in pairs; the
  /// second of each pair is cached for the next call.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// One Philox4x32-10 bijection. Exposed for known-answer tests.
  static Block philox(Block counter, Key key);

private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  std::optional<double> spare_normal_;
};

}  // namespace focalcal
