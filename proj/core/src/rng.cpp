#include "mertoneq/rng.hpp"

#include <cmath>
#include <numbers>

namespace mertoneq {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter c, Key k) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kW0;
      k[1] += kW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, c[0], hi0, lo0);
    mulhilo(kM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

double unit_open(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

NormalStream::NormalStream(std::uint64_t seed, std::uint32_t stream) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_(stream) {}

void NormalStream::fill(std::uint32_t path, std::uint64_t offset, std::span<double> out) const noexcept {
  // One Philox block yields the Box-Muller pair (2q, 2q+1).
  std::size_t i = 0;
  std::uint64_t index = offset;
  while (i < out.size()) {
    const std::uint64_t pair = index / 2;
    const auto r = Philox4x32::generate(
        {static_cast<std::uint32_t>(pair), static_cast<std::uint32_t>(pair >> 32), path, stream_}, key_);
    const double radius = std::sqrt(-2.0 * std::log(unit_open(r[0], r[1])));
    const double angle = 2.0 * std::numbers::pi * unit_open(r[2], r[3]);
    if (index % 2 == 0) {
      out[i++] = radius * std::cos(angle);
      ++index;
      if (i == out.size()) break;
    }
    out[i++] = radius * std::sin(angle);
    ++index;
  }
}

}  // namespace mertoneq
