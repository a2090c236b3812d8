#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace localsgd_lab {

/// Philox4x32-10 block function (Salmon et al., SC'11). Stateless: the same
/// (key, counter) always yields the same 128 output bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key) noexcept;

/// Coordinates of one stochastic draw. A worker's sample stream depends only
/// on (seed, worker, iteration, draw index), never on the algorithm running
/// it, so different algorithms see identical randomness.
struct DrawKey {
  std::uint64_t seed = 0;
  std::uint32_t worker = 0;
  std::uint64_t iteration = 0;

  std::array<std::uint32_t, 4> bits(std::uint32_t draw) const noexcept;
  /// Uniform on the open interval (0, 1), 53 bits of resolution.
  double uniform(std::uint32_t draw) const noexcept;
  double normal(std::uint32_t draw) const noexcept;
  /// Uniform integer in [0, n); n > 0.
  std::size_t index(std::uint32_t draw, std::size_t n) const noexcept;
};

/// A worker's private stream, keyed by (seed, worker_id).
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::uint32_t worker) noexcept : seed_(seed), worker_(worker) {}

  DrawKey at(std::uint64_t iteration) const noexcept { return {seed_, worker_, iteration}; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint32_t worker() const noexcept { return worker_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint32_t worker_ = 0;
};

}  // namespace localsgd_lab
