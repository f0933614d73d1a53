/*
 * Copyright 2026 The dmpc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cstdint>
#include <vector>

#include "dmpc/geometry.hpp"
#include "dmpc/planner.hpp"

namespace dmpc {
namespace {

PlannerConfig config(std::uint64_t seed) {
  PlannerConfig cfg;
  cfg.workspace = {Eigen::Vector2d(-2, -2), Eigen::Vector2d(2, 2)};
  cfg.seed = seed;
  return cfg;
}

TEST(Planner, ReachesGoalInFreeSpace) {
  const Eigen::Vector2d start(-1.5, 0), goal(1.5, 0.5);
  const auto path = rrt_plan(start, goal, {}, config(3));
  ASSERT_TRUE(path.reached_goal);
  EXPECT_EQ(path.waypoints.front(), Eigen::VectorXd(start));
  EXPECT_LE((path.waypoints.back() - goal).norm(), 0.1);
  for (std::size_t k = 1; k < path.waypoints.size(); ++k) {
    EXPECT_LE((path.waypoints[k] - path.waypoints[k - 1]).norm(), 0.2 + 1e-12);
  }
}

TEST(Planner, StartAtGoalIsSingleWaypoint) {
  const Eigen::Vector2d p(0.3, 0.3);
  const auto path = rrt_plan(p, p, {}, config(1));
  EXPECT_TRUE(path.reached_goal);
  EXPECT_EQ(path.waypoints.size(), 1u);
}

TEST(Planner, AvoidsObstacle) {
  const Polytope wall = placed_cube({Eigen::Vector2d(0, 0), 0.5});
  const std::vector<Polytope> obstacles{wall};
  const Eigen::Vector2d start(-1.5, 0), goal(1.5, 0);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto path = rrt_plan(start, goal, obstacles, config(seed));
    ASSERT_TRUE(path.reached_goal) << "seed " << seed;
    for (std::size_t k = 0; k < path.waypoints.size(); ++k) {
      EXPECT_FALSE(contains(wall, path.waypoints[k]));
      if (k > 0) EXPECT_FALSE(contains(wall, Eigen::VectorXd(0.5 * (path.waypoints[k] + path.waypoints[k - 1]))));
    }
  }
}

TEST(Planner, SameSeedSamePath) {
  const Eigen::Vector2d start(-1.5, -1), goal(1, 1.5);
  const auto a = rrt_plan(start, goal, {}, config(42));
  const auto b = rrt_plan(start, goal, {}, config(42));
  ASSERT_EQ(a.waypoints.size(), b.waypoints.size());
  for (std::size_t k = 0; k < a.waypoints.size(); ++k) EXPECT_EQ(a.waypoints[k], b.waypoints[k]);
}

TEST(Planner, ExhaustionReturnsClosestBranch) {
  PlannerConfig cfg = config(5);
  cfg.max_iters = 3;
  cfg.goal_bias = 1.0;
  const Eigen::Vector2d start(-1.5, 0), goal(1.5, 0);
  const auto path = rrt_plan(start, goal, {}, cfg);
  EXPECT_FALSE(path.reached_goal);
  ASSERT_EQ(path.waypoints.size(), 4u);
  EXPECT_NEAR(path.waypoints.back()(0), -1.5 + 3 * 0.2, 1e-12);
}

TEST(Planner, RejectsBadInput) {
  PlannerConfig cfg = config(1);
  cfg.step = 0;
  EXPECT_THROW(validate(cfg, 2), std::invalid_argument);
  EXPECT_THROW(validate(config(1), 3), std::invalid_argument);
  const Polytope wall = placed_cube({Eigen::Vector2d(0, 0), 0.5});
  const std::vector<Polytope> obstacles{wall};
  EXPECT_THROW(rrt_plan(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1), obstacles, config(1)),
               std::invalid_argument);
  EXPECT_THROW(rrt_plan(Eigen::Vector2d(3, 0), Eigen::Vector2d(1, 1), {}, config(1)),
               std::invalid_argument);
}

TEST(Planner, GuessFromPathShapes) {
  PlannedPath path;
  path.waypoints = {Eigen::Vector2d(0, 0), Eigen::Vector2d(0.1, 0), Eigen::Vector2d(0.3, 0)};
  const double dt = 0.1;
  const Eigen::Vector2d v0(0.5, 0);
  const Trajectory t = initial_guess_from_path(path, 5, dt, v0);
  ASSERT_EQ(t.states.size(), 6u);
  ASSERT_EQ(t.inputs.size(), 5u);
  EXPECT_EQ(t.states[0].tail(2), Eigen::VectorXd(v0));
  // central difference at k = 1
  EXPECT_NEAR(t.states[1](2), (0.3 - 0.0) / (2 * dt), 1e-12);
  // padded with the last waypoint
  for (int k = 2; k <= 5; ++k) EXPECT_EQ(t.states[k].head(2), Eigen::VectorXd(path.waypoints[2]));
  EXPECT_TRUE(t.states[5].tail(2).isZero());
  for (int k = 0; k < 5; ++k) {
    const Eigen::VectorXd fd = (t.states[k + 1].tail(2) - t.states[k].tail(2)) / dt;
    EXPECT_LE((t.inputs[k] - fd).norm(), 1e-12);
  }
  EXPECT_THROW(initial_guess_from_path(PlannedPath{}, 5, dt), std::invalid_argument);
}

TEST(Planner, SeedsAndUniforms) {
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
  EXPECT_NE(derive_seed(1, 0, 0), derive_seed(2, 0, 0));
  EXPECT_EQ(unit_uniform(0), 0.0);
  EXPECT_LT(unit_uniform(~std::uint64_t{0}), 1.0);
  EXPECT_EQ(unit_uniform(std::uint64_t{1} << 63), 0.5);
}

}  // namespace
}  // namespace dmpc
