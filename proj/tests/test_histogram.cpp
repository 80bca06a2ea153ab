#include <gtest/gtest.h>

#include "flowdyn/histogram.hpp"

using namespace flowdyn;

TEST(DirectionBin, ExamplesAtEight) {
  EXPECT_EQ(direction_bin_of(-kPi, 8), 0);
  EXPECT_EQ(direction_bin_of(0.0, 8), 4);
  EXPECT_EQ(direction_bin_of(kPi - 1e-9, 8), 7);
  EXPECT_EQ(direction_bin_of(kPi, 8), 7);  // wraps onto the top bin, never out of range
}

TEST(DirectionBin, EveryAngleLandsInRange) {
  for (int b : {1, 3, 8, 16}) {
    for (double t = -kPi; t < kPi; t += 0.01) {
      const int bin = direction_bin_of(t, b);
      EXPECT_GE(bin, 0);
      EXPECT_LT(bin, b);
    }
  }
}

TEST(DirHistogram, EmptyIsUniform) {
  DirHistogram h(8);
  EXPECT_EQ(h.total(), 0u);
  for (int b = 0; b < 8; ++b) EXPECT_DOUBLE_EQ(h.bin_prob(b), 0.125);
  EXPECT_NEAR(h.density(0.0), 1.0 / kTwoPi, 1e-12);
}

TEST(DirHistogram, CountsAndProbs) {
  DirHistogram h(8);
  h.observe(0.0);
  h.observe(0.0);
  h.observe(0.1);
  h.observe(-kPi);
  EXPECT_EQ(h.total(), 4u);
  EXPECT_DOUBLE_EQ(h.bin_prob(4), 0.75);
  EXPECT_DOUBLE_EQ(h.bin_prob(0), 0.25);
  EXPECT_DOUBLE_EQ(h.bin_prob(1), 0.0);
}

TEST(DirHistogram, DensityScaling) {
  DirHistogram h(8);
  h.observe(0.0);
  // all mass in one bin of width 2 pi / 8
  EXPECT_NEAR(h.density(0.0), 1.0 / (kTwoPi / 8.0), 1e-12);
  EXPECT_DOUBLE_EQ(h.density(2.0), DirHistogram::kDensityFloor);
}

TEST(DirHistogram, DensityIntegratesToOne) {
  DirHistogram h(8);
  for (double t : {0.0, 0.1, 1.0, -2.0, 3.0, 3.1, -0.3}) h.observe(t);
  const int steps = 20000;
  double integral = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double t = -kPi + (i + 0.5) * kTwoPi / steps;
    integral += h.density(t) * kTwoPi / steps;
  }
  EXPECT_NEAR(integral, 1.0, 1e-6);
}

TEST(DirHistogram, AddMergesCounts) {
  DirHistogram a(8), b(8);
  a.observe(0.0);
  b.observe(0.0);
  b.observe(2.0);
  a.add(b);
  EXPECT_EQ(a.total(), 3u);
  EXPECT_DOUBLE_EQ(a.bin_prob(4), 2.0 / 3.0);
  DirHistogram mismatched(4);
  EXPECT_THROW(a.add(mismatched), std::invalid_argument);
}

TEST(DirHistogram, InvalidBinCountThrows) {
  EXPECT_THROW(DirHistogram(0), std::invalid_argument);
}
