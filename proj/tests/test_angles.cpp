#include <gtest/gtest.h>

#include <random>

#include "flowdyn/angles.hpp"

using namespace flowdyn;

TEST(WrapAngle, Identity) { EXPECT_DOUBLE_EQ(wrap_angle(0.0), 0.0); }

TEST(WrapAngle, BoundaryMapsToLowerEnd) {
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), -kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), -kPi);
}

TEST(WrapAngle, ThreeHalvesPi) { EXPECT_NEAR(wrap_angle(1.5 * kPi), -0.5 * kPi, 1e-12); }

TEST(WrapAngle, NonFiniteThrows) {
  EXPECT_THROW(wrap_angle(std::numeric_limits<double>::infinity()), std::invalid_argument);
  EXPECT_THROW(wrap_angle(std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
}

TEST(WrapAngle, IdempotentAndPeriodic) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 2000; ++i) {
    const double a = u(rng);
    const double w = wrap_angle(a);
    EXPECT_GE(w, -kPi);
    EXPECT_LT(w, kPi);
    EXPECT_DOUBLE_EQ(wrap_angle(w), w);
    EXPECT_NEAR(wrap_angle(a + kTwoPi), w, 1e-9);
  }
}

TEST(AngularDiff, Basic) {
  EXPECT_NEAR(angular_diff(0.1, -0.1), 0.2, 1e-12);
  EXPECT_NEAR(angular_diff(kPi - 0.1, -kPi + 0.1), -0.2, 1e-12);
  EXPECT_DOUBLE_EQ(angular_diff(1.234, 1.234), 0.0);
}

TEST(AngularDiff, Antisymmetry) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-kPi + 0.01, kPi - 0.01);
  for (int i = 0; i < 2000; ++i) {
    const double a = u(rng), b = u(rng);
    const double d = angular_diff(a, b);
    if (std::abs(std::abs(d) - kPi) < 1e-9) continue;  // exactly opposite points
    EXPECT_NEAR(d, -angular_diff(b, a), 1e-9);
  }
}
