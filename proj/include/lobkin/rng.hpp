#pragma once

#include <array>
#include <cstdint>

namespace lobkin {

// Philox4x32-10 (Salmon et al., SC'11). Stateless block function.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

// One random stream per (seed, stream_id, lane); lanes separate purposes
// (arrivals, tie-breaks) within a run. Block i of a stream depends only
// on its coordinates, so streams can be generated on any thread in any order.
class CounterRng {
 public:
  CounterRng(RngSeed s, std::uint32_t lane = 0) noexcept
      : key_{static_cast<std::uint32_t>(s.seed), static_cast<std::uint32_t>(s.seed >> 32)},
        stream_lo_(static_cast<std::uint32_t>(s.stream_id)),
        stream_hi_(static_cast<std::uint32_t>(s.stream_id >> 32) ^ (lane * 0x9E3779B9u)) {}

  PhiloxCounter block(std::uint64_t index) const noexcept {
    return philox4x32_10({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                          stream_lo_, stream_hi_},
                         key_);
  }

  // Two doubles in [0,1) with 53 random bits each.
  std::array<double, 2> uniforms(std::uint64_t index) const noexcept {
    const PhiloxCounter b = block(index);
    return {to_unit((static_cast<std::uint64_t>(b[0]) << 32) | b[1]),
            to_unit((static_cast<std::uint64_t>(b[2]) << 32) | b[3])};
  }

  // Sequential convenience interface.
  double next_uniform() noexcept {
    if (buffered_) {
      buffered_ = false;
      return buffer_;
    }
    const auto u = uniforms(cursor_++);
    buffer_ = u[1];
    buffered_ = true;
    return u[0];
  }

  static double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

 private:
  PhiloxKey key_;
  std::uint32_t stream_lo_;
  std::uint32_t stream_hi_;
  std::uint64_t cursor_ = 0;
  double buffer_ = 0.0;
  bool buffered_ = false;
};

}  // namespace lobkin
