/* test_scenario.cpp */

#include <gtest/gtest.h>

#include <random>

#include "common.hpp"

using namespace symdock;
using testing_support::harbor;

namespace {

void expect_rect(const Rect& r, double x0, double x1, double y0, double y1) {
  EXPECT_NEAR(r.x_min, x0, 1e-12);
  EXPECT_NEAR(r.x_max, x1, 1e-12);
  EXPECT_NEAR(r.y_min, y0, 1e-12);
  EXPECT_NEAR(r.y_max, y1, 1e-12);
}

const Rect kBoundary{0, 8, 0, 6};

} // namespace

TEST(Inflate, WallObstacle) {
  expect_rect(inflate_obstacle({5.25, 5.75, 0, 3}, 0.5, kBoundary), 4.75, 6.25, 0, 3.5);
}

TEST(Inflate, UpperWallObstacle) {
  expect_rect(inflate_obstacle({2.25, 2.75, 3, 6}, 0.5, kBoundary), 1.75, 3.25, 2.5, 6);
}

TEST(Inflate, ZeroMarginIsIdentity) {
  const Rect r{1, 2, 1, 2};
  EXPECT_EQ(inflate_obstacle(r, 0.0, kBoundary), r);
}

TEST(Deflate, DockingBox) {
  expect_rect(deflate_target({0, 1.5, 3.75, 5.25}, 0.25), 0.25, 1.25, 4.0, 5.0);
}

TEST(Deflate, ZeroMarginIsIdentity) {
  const Rect r{0, 1.5, 3.75, 5.25};
  EXPECT_EQ(deflate_target(r, 0.0), r);
}

TEST(Deflate, DegenerateThrows) {
  EXPECT_THROW(deflate_target({0, 1, 0, 1}, 0.5), EmptyTarget);
}

TEST(Inflate, ContainsOriginalProperty) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(0.0, 7.0), ext(0.05, 1.0), mar(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = pos(rng), y = std::min(pos(rng), 5.0);
    const Rect r{x, std::min(8.0, x + ext(rng)), y, std::min(6.0, y + ext(rng))};
    const Rect inf = inflate_obstacle(r, mar(rng), kBoundary);
    EXPECT_TRUE(inf.contains(r));
    EXPECT_TRUE(kBoundary.contains(inf));
  }
}

TEST(Deflate, ContainedInOriginalProperty) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> pos(0.0, 6.0), ext(1.0, 2.0), mar(0.0, 0.49);
  for (int i = 0; i < 1000; ++i) {
    const double x = pos(rng), y = pos(rng);
    const Rect r{x, x + ext(rng), y, y + ext(rng)};
    EXPECT_TRUE(r.contains(deflate_target(r, mar(rng))));
  }
}

TEST(Footprint, ArenaCenterIsFree) {
  EXPECT_FALSE(footprint_collision({4, 3, 0}, harbor().scenario));
}

TEST(Footprint, InsideObstacleCollides) {
  EXPECT_TRUE(footprint_collision({5.5, 1.5, 0}, harbor().scenario));
}

TEST(Footprint, BowCrossesWall) {
  // heading pi/2 puts the bow at y + 0.5 and the beam across x; pi turns the bow to x < 0
  EXPECT_TRUE(footprint_collision({0.1, 3, kPi / 2}, harbor().scenario));
  EXPECT_TRUE(footprint_collision({0.1, 3, kPi}, harbor().scenario));
}

TEST(Footprint, HalfTurnSymmetry) {
  const Scenario& sc = harbor().scenario;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ux(-0.5, 8.5), uy(-0.5, 6.5), up(-kPi, kPi);
  int hits = 0;
  for (int i = 0; i < 5000; ++i) {
    const Pose p{ux(rng), uy(rng), up(rng)};
    const bool a = footprint_collision(p, sc);
    hits += a;
    EXPECT_EQ(a, footprint_collision({p.x, p.y, p.psi + kPi}, sc));
  }
  EXPECT_GT(hits, 0);
}

TEST(Footprint, ClearanceMatchesCollision) {
  const Scenario& sc = harbor().scenario;
  EXPECT_DOUBLE_EQ(footprint_clearance({5.5, 1.5, 0}, sc), 0.0);
  // stern tip at x = 4.5, obstacle face at 5.25
  EXPECT_NEAR(footprint_clearance({4.0, 1.5, kPi}, sc), 0.75, 1e-12);
  Scenario empty = sc;
  empty.obstacles.clear();
  EXPECT_TRUE(std::isinf(footprint_clearance({4, 3, 0}, empty)));
}

TEST(Scenario, ValidateRejectsBadInput) {
  Scenario sc = harbor().scenario;
  EXPECT_NO_THROW(sc.validate());
  sc.target = {7.5, 9.0, 0, 1};
  EXPECT_THROW(sc.validate(), ConfigError);
  sc = harbor().scenario;
  sc.obstacle_margin = -0.1;
  EXPECT_THROW(sc.validate(), ConfigError);
  sc = harbor().scenario;
  sc.target_margin = 0.75;
  EXPECT_THROW(sc.validate(), EmptyTarget);
}
