#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "roughdelay/philox.hpp"

using namespace roughdelay;

// Known-answer vectors of Philox4x32-10 from the Random123 distribution.
TEST(Philox, KnownAnswerZero) {
  const Philox4x32 gen({0u, 0u});
  const auto out = gen({0u, 0u, 0u, 0u});
  EXPECT_EQ(out, (Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerOnes) {
  const Philox4x32 gen({0xffffffffu, 0xffffffffu});
  const auto out = gen({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out, (Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
  const Philox4x32 gen({0xa4093822u, 0x299f31d0u});
  const auto out = gen({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u});
  EXPECT_EQ(out, (Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(GaussianStream, ReproducibleAndIndependentOfOrder) {
  const GaussianStream a(42, 3, 1);
  std::vector<double> fwd(101);
  a.fill(fwd);
  for (std::uint64_t j = 101; j-- > 0;) EXPECT_EQ(a(j), fwd[j]);
  const GaussianStream b(42, 3, 1);
  EXPECT_EQ(b(57), fwd[57]);
}

TEST(GaussianStream, DistinctStreamsDiffer) {
  EXPECT_NE(GaussianStream(1, 0, 0)(0), GaussianStream(1, 1, 0)(0));
  EXPECT_NE(GaussianStream(1, 0, 0)(0), GaussianStream(1, 0, 1)(0));
  EXPECT_NE(GaussianStream(1, 0, 0)(0), GaussianStream(2, 0, 0)(0));
}

TEST(GaussianStream, StandardNormalMoments) {
  const GaussianStream g(9, 0, 0);
  const int n = 200000;
  double m1 = 0, m2 = 0, m4 = 0;
  for (int j = 0; j < n; ++j) {
    const double x = g(static_cast<std::uint64_t>(j));
    m1 += x;
    m2 += x * x;
    m4 += x * x * x * x;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  EXPECT_NEAR(m1, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(m2, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(m4, 3.0, 4.0 * std::sqrt(96.0 / n));
}

TEST(UniformStream, RangeAndIntegers) {
  const UniformStream u(5, 2);
  std::vector<int> hits(7, 0);
  for (std::uint64_t j = 0; j < 7000; ++j) {
    const double x = u(j);
    ASSERT_GT(x, 0.0);
    ASSERT_LT(x, 1.0);
    const auto k = u.integer(j, 3, 9);
    ASSERT_GE(k, 3);
    ASSERT_LE(k, 9);
    ++hits[k - 3];
  }
  for (int h : hits) EXPECT_GT(h, 800);
}
