#include <gtest/gtest.h>

#include <random>
#include <unordered_set>

#include "flowdyn/binding.hpp"
#include "flowdyn/spatial_hash.hpp"

using namespace flowdyn;

TEST(KeyOf, Origin) {
  const CellKey k = key_of({0.0, 0.0, 0.0}, 0.5);
  EXPECT_EQ(k, (CellKey{0, 0, 0}));
}

TEST(KeyOf, FloorSemanticsAtBoundaries) {
  const CellKey k = key_of({0.49, 0.5, -0.01}, 0.5);
  EXPECT_EQ(k, (CellKey{0, 1, -1}));
}

TEST(KeyOf, SameBoxSameKey) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double delta = 0.5;
  for (int trial = 0; trial < 200; ++trial) {
    const double bx = std::floor(u(rng) * 20 - 10) * delta;
    const double by = std::floor(u(rng) * 20 - 10) * delta;
    const Position3 p1{bx + u(rng) * delta * 0.999, by + u(rng) * delta * 0.999, 0.0};
    const Position3 p2{bx + u(rng) * delta * 0.999, by + u(rng) * delta * 0.999, 0.0};
    EXPECT_EQ(key_of(p1, delta), key_of(p2, delta));
  }
}

TEST(KeyOf, InvalidInputsThrow) {
  EXPECT_THROW(key_of({0.0, 0.0, 0.0}, 0.0), std::invalid_argument);
  EXPECT_THROW(key_of({std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0}, 0.5),
               std::invalid_argument);
}

TEST(Observe, AllocatesOnFirstObservation) {
  DynamicsMap map(0.5, 50, 8);
  std::mt19937_64 rng(2);
  EXPECT_EQ(map.cell_count(), 0u);
  map.observe({0.1, 0.1, 0.0}, CylindricalSample(0.0, 1.0), rng);
  EXPECT_EQ(map.cell_count(), 1u);
  map.observe({0.2, 0.2, 0.0}, CylindricalSample(0.1, 1.0), rng);
  EXPECT_EQ(map.cell_count(), 1u);
  const DynamicsCell* cell = map.lookup({0.15, 0.15, 0.0});
  ASSERT_NE(cell, nullptr);
  EXPECT_EQ(cell->buffer.total_seen(), 2u);
}

TEST(Observe, DistinctBoxesDistinctCells) {
  DynamicsMap map(1.0, 50, 8);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::unordered_set<CellKey, CellKeyHash> expected;
  for (int i = 0; i < 1000; ++i) {
    const int box = i % 7;
    const Position3 p{box * 3.0 + u(rng), u(rng), 0.0};
    expected.insert(key_of(p, 1.0));
    map.observe(p, CylindricalSample(0.0, 1.0), rng);
  }
  EXPECT_EQ(expected.size(), 7u);
  EXPECT_EQ(map.cell_count(), 7u);
}

TEST(Observe, CellCountNeverExceedsVisitedBoxes) {
  DynamicsMap map(0.25, 20, 8);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::unordered_set<CellKey, CellKeyHash> visited;
  for (int i = 0; i < 2000; ++i) {
    const Position3 p{u(rng), u(rng), 0.0};
    visited.insert(key_of(p, 0.25));
    map.observe(p, CylindricalSample(0.0, 1.0), rng);
    EXPECT_LE(map.cell_count(), visited.size());
  }
  EXPECT_EQ(map.cell_count(), visited.size());
}
