#pragma once

#include <array>
#include <cstdint>

#include "ibcsim/numerics.hpp"

namespace ibcsim {

namespace detail {

/// One Philox4x32-10 block: 4 output words from a 128-bit counter and a
/// 64-bit key. Pure function; the whole reproducibility story rests on it.
std::array<std::uint32_t, 4> philox4x32_10(const std::array<std::uint32_t, 4>& counter,
                                           const std::array<std::uint32_t, 2>& key);

}  // namespace detail

/// Purpose tag occupying the top bits of a stream id, so draws for channels,
/// beams, selection randomness and test scaffolding can never collide even
/// when they share a (point, trial) coordinate.
enum class StreamPurpose : std::uint64_t {
  channel = 1,
  beams = 2,
  selection = 3,
  oracle = 4,
  bounds = 5,
  generic = 15,
};

/// Stream id layout: purpose in bits 56..63, sweep-point index in bits
/// 40..55, trial index in bits 0..39.
constexpr std::uint64_t make_stream_id(StreamPurpose purpose, std::uint64_t point, std::uint64_t trial) {
  return (static_cast<std::uint64_t>(purpose) << 56) | ((point & 0xFFFFull) << 40) | (trial & 0xFFFFFFFFFFull);
}

/// Counter-based random stream. A (seed, stream_id) pair fully determines
/// the sequence, independent of thread count or call interleaving across
/// other streams, which is what makes parallel Monte Carlo reproducible.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Standard real normal via Box-Muller.
  double gaussian();

  /// Circularly symmetric complex normal, unit total variance
  /// (1/2 per real component).
  cxd complex_gaussian();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  unsigned used_ = 2;  // u64 slots consumed in block_ (2 = empty)
};

}  // namespace ibcsim
