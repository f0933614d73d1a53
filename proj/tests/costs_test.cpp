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

#include "dmpc/costs.hpp"

namespace dmpc {
namespace {

TEST(Costs, StageAndTerminal) {
  const auto w = scaled_weights(2, 0.1, 1.0, 1.0, 100.0);
  const GoalSpec goal = rest_goal<double>(Eigen::Vector2d(1, 0));
  const Eigen::VectorXd s = Eigen::Vector4d(0, 0, 1, 0);
  const Eigen::VectorXd u = Eigen::Vector2d(2, 0);
  // e = (-1, 0, 1, 0): 0.1 * 2 + 4.
  EXPECT_NEAR(stage_cost(s, u, goal, w), 4.2, 1e-14);
  EXPECT_NEAR(terminal_cost(s, goal, w), 2.0, 1e-14);
  EXPECT_THROW(stage_cost(Eigen::VectorXd(Eigen::Vector3d::Zero()), u, goal, w),
               std::invalid_argument);
}

TEST(Costs, TrajectoryCostWithSlack) {
  const auto w = scaled_weights(2, 1.0, 1.0, 1.0, 10.0);
  const GoalSpec goal = rest_goal<double>(Eigen::Vector2d(0, 0));
  Trajectory t;
  t.states = {Eigen::Vector4d(1, 0, 0, 0), Eigen::Vector4d(0, 1, 0, 0)};
  t.inputs = {Eigen::Vector2d(0, 1)};
  EXPECT_NEAR(trajectory_cost(t, goal, w), 3.0, 1e-14);
  const std::vector<double> slacks{0.1, 0.2};
  EXPECT_NEAR(trajectory_cost(t, goal, w, std::span<const double>(slacks)), 6.0, 1e-14);
  const std::vector<double> bad{-0.1};
  EXPECT_THROW(trajectory_cost(t, goal, w, std::span<const double>(bad)), std::invalid_argument);
  t.inputs.clear();
  EXPECT_THROW(trajectory_cost(t, goal, w), std::invalid_argument);
}

TEST(Costs, Validation) {
  auto w = scaled_weights(2, 0.1, 1.0, 1.0, 100.0);
  EXPECT_NO_THROW(validate(w, 2));
  w.R(0, 0) = 0.0;
  EXPECT_THROW(validate(w, 2), std::invalid_argument);
  w = scaled_weights(2, 0.1, 1.0, 1.0, 100.0);
  w.Q(0, 1) = 1.0;
  EXPECT_THROW(validate(w, 2), std::invalid_argument);
  w = scaled_weights(2, 0.1, 1.0, 1.0, -1.0);
  EXPECT_THROW(validate(w, 2), std::invalid_argument);
  EXPECT_THROW(validate(scaled_weights(3, 0.1, 1.0, 1.0, 1.0), 2), std::invalid_argument);
}

TEST(Costs, GlobalCostSumsAgents) {
  const auto w = scaled_weights(2, 1.0, 1.0, 1.0, 1.0);
  Trajectory t;
  t.states = {Eigen::Vector4d(1, 0, 0, 0), Eigen::Vector4d(1, 0, 0, 0)};
  t.inputs = {Eigen::Vector2d(0, 0)};
  const std::vector<Trajectory> ts{t, t};
  const std::vector<GoalSpec> gs{rest_goal<double>(Eigen::Vector2d(0, 0)),
                                 rest_goal<double>(Eigen::Vector2d(1, 0))};
  EXPECT_NEAR(global_cost(std::span<const Trajectory>(ts), std::span<const GoalSpec>(gs), w), 2.0,
              1e-14);
}

TEST(Costs, AugmentedLagrangian) {
  const StackLayout layout{2, 1, 2};
  CopyVector v(layout), vbar(layout), gamma(layout);
  v.data().setConstant(1.0);
  gamma.data().setConstant(0.5);
  const auto w = scaled_weights(2, 0.0, 1.0, 0.0, 1.0);
  const GoalSpec goal = rest_goal<double>(Eigen::Vector2d(1, 1));
  // Own cost: input (1, 1) with R = I gives 2; states cost nothing (Q = 0).
  const double n = static_cast<double>(layout.size());
  EXPECT_NEAR(augmented_lagrangian(0, v, vbar, gamma, 2.0, goal, w), 2.0 + 0.5 * n + n, 1e-12);
  EXPECT_THROW(augmented_lagrangian(2, v, vbar, gamma, 1.0, goal, w), std::invalid_argument);
  EXPECT_THROW(augmented_lagrangian(0, v, vbar, gamma, -1.0, goal, w), std::invalid_argument);
}

TEST(Costs, FloatInstantiation) {
  const auto w = scaled_weights<float>(2, 1.0f, 1.0f, 1.0f, 1.0f);
  const auto goal = rest_goal<float>(Eigen::Vector2f(0, 0));
  const Eigen::VectorXf s = Eigen::VectorXf::Ones(4);
  const Eigen::VectorXf u = Eigen::VectorXf::Zero(2);
  EXPECT_FLOAT_EQ(stage_cost(s, u, goal, w), 4.0f);
}

}  // namespace
}  // namespace dmpc
