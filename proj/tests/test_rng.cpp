#include <gtest/gtest.h>

#include <set>

#include "unfold/rng.hpp"

using namespace unfold;

// Known-answer vectors published with the Random123 library.
TEST(Philox, KnownAnswerZero) {
  const auto out = philox4x32_10({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerOnes) {
  const auto out = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
  const auto out = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(RngStream, SameSeedAndStreamGiveIdenticalSequences) {
  RngStream a(42, 7), b(42, 7);
  for (int k = 0; k < 1000; ++k) {
    ASSERT_EQ(a.next_u64(), b.next_u64());
    ASSERT_EQ(a.normal(), b.normal());
  }
}

TEST(RngStream, StreamsAndSeedsDiffer) {
  RngStream a(42, 7), b(42, 8), c(43, 7);
  int same_b = 0, same_c = 0;
  for (int k = 0; k < 100; ++k) {
    const auto x = a.next_u64();
    same_b += x == b.next_u64();
    same_c += x == c.next_u64();
  }
  EXPECT_EQ(same_b, 0);
  EXPECT_EQ(same_c, 0);
}

TEST(RngStream, UniformIsInsideOpenInterval) {
  RngStream rng(1, 1);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double u = rng.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(RngStream, DrawCounterTracksConsumption) {
  RngStream rng(5, 5);
  EXPECT_EQ(rng.draws(), 0u);
  rng.next_u64();
  EXPECT_EQ(rng.draws(), 1u);
  rng.next_u64();
  rng.next_u64();
  EXPECT_EQ(rng.draws(), 3u);
}

TEST(StreamId, DistinctInputsGiveDistinctIds) {
  std::set<std::uint64_t> ids;
  for (std::uint64_t tag = 0; tag < 8; ++tag)
    for (std::uint64_t it = 0; it < 50; ++it)
      for (std::uint64_t e = 0; e < 50; ++e) ids.insert(stream_id(tag, it, e));
  EXPECT_EQ(ids.size(), 8u * 50u * 50u);
}
