#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace mertoneq {

// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;
  static Counter generate(Counter counter, Key key) noexcept;
};

// Uniform in (0, 1) from 52 random bits, centred in its cell so 0 and 1 are never hit.
double unit_open(std::uint32_t hi, std::uint32_t lo) noexcept;

// Standard normals addressed by (seed, stream, path, index): any draw can be
// regenerated without touching the others, so results do not depend on the
// order or the thread that produced them. A simulation step k of a
// d-dimensional path uses indices k*d .. k*d+d-1.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint32_t stream) noexcept;
  // out[i] is normal number offset + i of the path.
  void fill(std::uint32_t path, std::uint64_t offset, std::span<double> out) const noexcept;

 private:
  Philox4x32::Key key_;
  std::uint32_t stream_;
};

}  // namespace mertoneq
