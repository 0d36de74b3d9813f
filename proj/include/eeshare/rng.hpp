#pragma once

#include <array>
#include <cstdint>
#include <utility>

namespace eeshare {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// Pure function of (counter, key); no hidden state.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

/// Sequential stream over one Philox substream. The 64-bit seed is the key;
/// counter words 2 and 3 hold (substream, stream id); words 0 and 1 are the
/// running block index. Distinct (substream, stream) pairs never overlap.
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint32_t substream, std::uint32_t stream_id);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1], safe for log().
  double uniform_open0() { return 1.0 - uniform(); }
  /// Standard normal via Box-Muller; caches the second variate.
  double normal();

 private:
  void refill();

  PhiloxKey key_;
  PhiloxCounter ctr_;
  PhiloxCounter block_{};
  int pos_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace eeshare
