#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "localsgd_lab/rng.hpp"

using namespace localsgd_lab;

// Known-answer vectors from the Random123 distribution (kat_vectors).
TEST(Philox, KnownAnswerZero) {
  const auto out = philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
}

TEST(Philox, KnownAnswerAllOnes) {
  const auto out = philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff});
  EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
}

TEST(Philox, KnownAnswerPi) {
  const auto out = philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0});
  EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(DrawKey, StreamsAreDistinct) {
  const DrawKey a{7, 0, 3};
  const DrawKey b{7, 1, 3};
  const DrawKey c{7, 0, 4};
  const DrawKey d{8, 0, 3};
  EXPECT_NE(a.bits(0), b.bits(0));
  EXPECT_NE(a.bits(0), c.bits(0));
  EXPECT_NE(a.bits(0), d.bits(0));
  EXPECT_NE(a.bits(0), a.bits(1));
  EXPECT_EQ(a.bits(5), (DrawKey{7, 0, 3}.bits(5)));
}

TEST(DrawKey, HighIterationBitsMatter) {
  const DrawKey lo{1, 0, 5};
  const DrawKey hi{1, 0, 5 + (std::uint64_t{1} << 32)};
  EXPECT_NE(lo.bits(0), hi.bits(0));
}

TEST(DrawKey, UniformInOpenInterval) {
  for (std::uint32_t j = 0; j < 10000; ++j) {
    const double u = DrawKey{3, 2, j}.uniform(j);
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(DrawKey, NormalMoments) {
  const int m = 200000;
  double sum = 0;
  double sq = 0;
  for (int j = 0; j < m; ++j) {
    const double z = DrawKey{11, 0, static_cast<std::uint64_t>(j)}.normal(0);
    sum += z;
    sq += z * z;
  }
  const double mean = sum / m;
  EXPECT_LT(std::abs(mean), 5.0 / std::sqrt(m));
  EXPECT_NEAR(sq / m, 1.0, 0.02);
}

TEST(DrawKey, IndexCoversRange) {
  std::set<std::size_t> seen;
  for (std::uint32_t j = 0; j < 1000; ++j) {
    const std::size_t i = DrawKey{5, 1, j}.index(0, 7);
    ASSERT_LT(i, 7u);
    seen.insert(i);
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(RngStream, AtCarriesCoordinates) {
  const RngStream s(42, 3);
  const DrawKey k = s.at(9);
  EXPECT_EQ(k.seed, 42u);
  EXPECT_EQ(k.worker, 3u);
  EXPECT_EQ(k.iteration, 9u);
}
