// SPDX-License-Identifier: Apache-2.0
//
// pprzf - partially-projected regularized zero-forcing precoding toolkit
// ------------------------------------------------------------------------

#pragma once

#include "pprzf/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace pprzf {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Identifies one reproducible random stream. Every stream is a pure function
/// of (seed, stream_id), so trial t of a sweep can be regenerated on any
/// thread in any order.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  /// Child stream `index` of this stream. Children of distinct parents or
  /// distinct indices are (with overwhelming probability) distinct.
  [[nodiscard]] RngSpec substream(std::uint64_t index) const noexcept {
    return {seed, splitmix64(splitmix64(stream_id) ^ splitmix64(index + 0x5851F42D4C957F2DULL))};
  }

  friend bool operator==(const RngSpec&, const RngSpec&) = default;
};

class StreamEngine {
 public:
  explicit StreamEngine(const RngSpec& spec) : engine_(make_engine(spec)) {}

  double normal() { return normal_(engine_); }

  /// Circularly symmetric complex Gaussian with unit variance.
  cplx complex_normal() {
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return cplx(re, im) * M_SQRT1_2;
  }

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  static std::mt19937_64 make_engine(const RngSpec& spec) {
    const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xFFFFFFFFu); };
    const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(spec.seed), hi(spec.seed), lo(spec.stream_id), hi(spec.stream_id)};
    return std::mt19937_64(seq);
  }

  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// rows x cols matrix of i.i.d. CN(0, variance) entries, filled row-major.
inline CMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, StreamEngine& eng, double variance = 1.0) {
  const double scale = std::sqrt(variance);
  CMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * eng.complex_normal();
  return m;
}

}  // namespace pprzf
