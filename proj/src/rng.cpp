#include "localsgd_lab/rng.hpp"

#include <cmath>
#include <numbers>

namespace localsgd_lab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double to_open_unit(std::uint64_t x) noexcept {
  // 53 random bits, shifted by half an ulp so 0 and 1 are never returned.
  return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::array<std::uint32_t, 4> DrawKey::bits(std::uint32_t draw) const noexcept {
  const std::array<std::uint32_t, 4> counter = {worker, static_cast<std::uint32_t>(iteration),
                                                static_cast<std::uint32_t>(iteration >> 32), draw};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return philox4x32(counter, key);
}

double DrawKey::uniform(std::uint32_t draw) const noexcept {
  const auto b = bits(draw);
  return to_open_unit((static_cast<std::uint64_t>(b[0]) << 32) | b[1]);
}

double DrawKey::normal(std::uint32_t draw) const noexcept {
  // Box-Muller on the two 64-bit halves of one block; the sine branch is dropped.
  const auto b = bits(draw);
  const double u1 = to_open_unit((static_cast<std::uint64_t>(b[0]) << 32) | b[1]);
  const double u2 = to_open_unit((static_cast<std::uint64_t>(b[2]) << 32) | b[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t DrawKey::index(std::uint32_t draw, std::size_t n) const noexcept {
  const auto b = bits(draw);
  const std::uint64_t x = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
  // Multiply-high range reduction; bias is below 2^-32 for n < 2^32.
  return static_cast<std::size_t>((static_cast<unsigned __int128>(x) * n) >> 64);
}

}  // namespace localsgd_lab
