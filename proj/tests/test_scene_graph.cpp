#include <gtest/gtest.h>

#include <sstream>

#include "flowdyn/scene_graph.hpp"

using namespace flowdyn;

TEST(BuildNavLayer, GridCounts) {
  const auto g = build_nav_layer({0.0, 0.0, 18.0, 10.0}, 1.0);
  EXPECT_EQ(g.alive_count(), 180u);
  const auto tiny = build_nav_layer({0.0, 0.0, 1.0, 1.0}, 1.0);
  EXPECT_EQ(tiny.alive_count(), 1u);
}

TEST(BuildNavLayer, HalvedSpacingQuadruplesNodes) {
  const auto coarse = build_nav_layer({0.0, 0.0, 8.0, 6.0}, 1.0);
  const auto fine = build_nav_layer({0.0, 0.0, 8.0, 6.0}, 0.5);
  EXPECT_EQ(fine.alive_count(), 4u * coarse.alive_count());
}

TEST(BuildNavLayer, DegenerateBoundsThrow) {
  EXPECT_THROW(build_nav_layer({0.0, 0.0, 0.0, 5.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(build_nav_layer({0.0, 0.0, 5.0, 5.0}, 0.0), std::invalid_argument);
}

TEST(ApplyEvent, AddRemoveRoundTrip) {
  LayeredGraph g;
  const std::size_t before = g.alive_count();
  g.apply_event({1.0, PoseEvent::Kind::AddNode, 100, {1.0, 2.0, 0.0}});
  EXPECT_EQ(g.alive_count(), before + 1);
  const auto notes = g.apply_event({2.0, PoseEvent::Kind::RemoveNode, 100, {}});
  ASSERT_EQ(notes.size(), 1u);
  EXPECT_EQ(notes[0].kind, BindingNotification::Kind::NodeRemoved);
  EXPECT_EQ(g.alive_count(), before);
}

TEST(ApplyEvent, MovePreservesIdentity) {
  LayeredGraph g;
  g.apply_event({0.0, PoseEvent::Kind::AddNode, 7, {0.0, 0.0, 0.0}});
  const auto notes = g.apply_event({1.0, PoseEvent::Kind::MoveNode, 7, {3.0, 4.0, 0.0}});
  ASSERT_EQ(notes.size(), 1u);
  EXPECT_EQ(notes[0].kind, BindingNotification::Kind::NodeMoved);
  EXPECT_DOUBLE_EQ(notes[0].old_position.x, 0.0);
  EXPECT_DOUBLE_EQ(notes[0].new_position.x, 3.0);
  const NavNode* n = g.find(7);
  ASSERT_NE(n, nullptr);
  EXPECT_TRUE(n->alive);
  EXPECT_DOUBLE_EQ(n->position.y, 4.0);
}

TEST(ApplyEvent, InvalidReferencesThrow) {
  LayeredGraph g;
  g.apply_event({0.0, PoseEvent::Kind::AddNode, 1, {0.0, 0.0, 0.0}});
  EXPECT_THROW(g.apply_event({1.0, PoseEvent::Kind::AddNode, 1, {1.0, 1.0, 0.0}}),
               std::invalid_argument);
  EXPECT_THROW(g.apply_event({1.0, PoseEvent::Kind::MoveNode, 99, {1.0, 1.0, 0.0}}),
               std::invalid_argument);
  EXPECT_THROW(g.apply_event({1.0, PoseEvent::Kind::RemoveNode, 99, {}}),
               std::invalid_argument);
  g.apply_event({2.0, PoseEvent::Kind::RemoveNode, 1, {}});
  // ids are never reused
  EXPECT_THROW(g.apply_event({3.0, PoseEvent::Kind::AddNode, 1, {0.0, 0.0, 0.0}}),
               std::invalid_argument);
}

TEST(PoseEventStream, ParsesAllKinds) {
  std::istringstream in(
      "# comment\n"
      "t=0.5 ADD 3 1.0 2.0 0.0\n"
      "t=1.5 MOVE 3 1.5 2.5 0.0\n"
      "t=2.0 REMOVE 3\n");
  const auto events = parse_pose_events(in);
  ASSERT_EQ(events.size(), 3u);
  EXPECT_EQ(events[0].kind, PoseEvent::Kind::AddNode);
  EXPECT_DOUBLE_EQ(events[0].time, 0.5);
  EXPECT_EQ(events[1].kind, PoseEvent::Kind::MoveNode);
  EXPECT_DOUBLE_EQ(events[1].position.y, 2.5);
  EXPECT_EQ(events[2].kind, PoseEvent::Kind::RemoveNode);
}

TEST(PoseEventStream, RejectsMalformedAndOutOfOrder) {
  std::istringstream bad("t=1.0 WIGGLE 3\n");
  EXPECT_THROW(parse_pose_events(bad), std::runtime_error);
  std::istringstream unordered(
      "t=2.0 ADD 1 0 0 0\n"
      "t=1.0 ADD 2 0 0 0\n");
  EXPECT_THROW(parse_pose_events(unordered), std::runtime_error);
}

TEST(NearestAlive, SkipsDeadNodes) {
  LayeredGraph g;
  g.apply_event({0.0, PoseEvent::Kind::AddNode, 1, {0.0, 0.0, 0.0}});
  g.apply_event({0.0, PoseEvent::Kind::AddNode, 2, {10.0, 0.0, 0.0}});
  EXPECT_EQ(g.nearest_alive({1.0, 0.0, 0.0}).value(), 1);
  g.apply_event({1.0, PoseEvent::Kind::RemoveNode, 1, {}});
  EXPECT_EQ(g.nearest_alive({1.0, 0.0, 0.0}).value(), 2);
  g.apply_event({2.0, PoseEvent::Kind::RemoveNode, 2, {}});
  EXPECT_FALSE(g.nearest_alive({1.0, 0.0, 0.0}).has_value());
}
