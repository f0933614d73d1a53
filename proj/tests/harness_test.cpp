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

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "dmpc/dynamics.hpp"
#include "dmpc/harness.hpp"
#include "dmpc/scenario_io.hpp"

namespace dmpc {
namespace {

Scenario shipped(const std::string& name) {
  return load_scenario(std::string(DMPC_SCENARIO_DIR) + "/" + name + ".yaml");
}

Eigen::VectorXd state(double x, double y, double vx = 0, double vy = 0) {
  return Eigen::Vector4d(x, y, vx, vy);
}

Scenario single_agent() {
  Scenario sc;
  sc.name = "single";
  sc.agents = {{state(0, 0), state(1, -0.5)}};
  sc.planner.workspace = {Eigen::Vector2d(-2, -2), Eigen::Vector2d(2, 2)};
  return sc;
}

TEST(Harness, CollisionMetricsExample) {
  const std::vector<Eigen::VectorXd> pos{Eigen::Vector2d(0, 0), Eigen::Vector2d(0.05, 0.3),
                                         Eigen::Vector2d(1, 1)};
  const auto m = collision_metrics(pos, 0.1);
  EXPECT_DOUBLE_EQ(m.min_inf_dist, 0.3);
  EXPECT_TRUE(m.violating_pairs.empty());
  const auto tight = collision_metrics(pos, 0.5);
  ASSERT_EQ(tight.violating_pairs.size(), 1u);
  EXPECT_EQ(tight.violating_pairs[0], std::make_pair(0, 1));
  EXPECT_EQ(collision_metrics({Eigen::Vector2d(0, 0)}, 0.1).min_inf_dist,
            std::numeric_limits<double>::infinity());
}

TEST(Harness, GoalReachedUsesBothTolerances) {
  const std::vector<Eigen::VectorXd> goal{state(1, 1)};
  EXPECT_TRUE(goal_reached({state(1.03, 1, 0.01, 0)}, goal, 0.05, 0.05));
  EXPECT_FALSE(goal_reached({state(1.1, 1)}, goal, 0.05, 0.05));
  EXPECT_FALSE(goal_reached({state(1, 1, 0.1, 0)}, goal, 0.05, 0.05));
  EXPECT_THROW(goal_reached({}, goal, 0.05, 0.05), std::invalid_argument);
}

TEST(Harness, ValidateRejectsBadScenarios) {
  Scenario sc = single_agent();
  EXPECT_NO_THROW(validate(sc));
  sc.agents.push_back({state(0.05, 0.02), state(-1, 0)});
  EXPECT_THROW(validate(sc), std::invalid_argument);
  sc = single_agent();
  sc.delta = 0;
  EXPECT_THROW(validate(sc), std::invalid_argument);
  sc = single_agent();
  sc.agents.clear();
  EXPECT_THROW(validate(sc), std::invalid_argument);
  sc = single_agent();
  sc.agents[0].goal = Eigen::Vector3d(1, 1, 1);
  EXPECT_THROW(validate(sc), std::invalid_argument);
}

TEST(Harness, SingleAgentReachesGoal) {
  const auto rep = run_dmpc(single_agent());
  EXPECT_TRUE(rep.success) << rep.error;
  EXPECT_LT(rep.steps, 300);
  EXPECT_LE(rep.final_goal_error, 0.05);
  EXPECT_EQ(rep.infeasibility_events, 0);
  ASSERT_EQ(static_cast<int>(rep.log.size()), rep.steps);
  for (const auto& l : rep.log) EXPECT_EQ(l.admm_rounds, 1);
}

TEST(Harness, LoggedStepsFollowTheDynamics) {
  Scenario sc = shipped("swap_2agents");
  sc.max_steps = 40;
  const auto rep = run_dmpc(sc);
  ASSERT_EQ(rep.log.size(), 40u);
  const auto model = make_discrete_double_integrator(sc.n, sc.dt);
  std::vector<Eigen::VectorXd> prev;
  for (const auto& a : sc.agents) prev.push_back(a.start);
  double closest = std::numeric_limits<double>::infinity();
  for (const auto& l : rep.log) {
    std::vector<Eigen::VectorXd> pos;
    for (int i = 0; i < sc.num_agents(); ++i) {
      const Eigen::VectorXd expect = step(model, prev[i], l.inputs[i]);
      EXPECT_LE((l.states[i] - expect).cwiseAbs().maxCoeff(), 1e-12);
      pos.push_back(l.states[i].head(sc.n));
    }
    const double d = collision_metrics(pos, sc.delta).min_inf_dist;
    EXPECT_DOUBLE_EQ(l.min_dist, d);
    EXPECT_GE(d, sc.delta - 1e-6) << "step " << l.step;
    closest = std::min(closest, d);
    prev = l.states;
  }
  EXPECT_DOUBLE_EQ(rep.min_dist, closest);
  EXPECT_FALSE(rep.success);  // 40 steps are not enough to finish the swap
}

TEST(Harness, RunIsDeterministic) {
  Scenario sc = shipped("swap_2agents");
  sc.max_steps = 15;
  EXPECT_EQ(trace_csv(run_dmpc(sc), sc.n), trace_csv(run_dmpc(sc), sc.n));
}

TEST(Harness, SweepHandlesEdgeLists) {
  const Scenario sc = single_agent();
  EXPECT_TRUE(sweep_delta(sc, {}).empty());
  const auto one = sweep_delta(sc, {0.2});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_DOUBLE_EQ(one[0].delta, 0.2);
  EXPECT_TRUE(one[0].report.success);
  const auto bad = sweep_delta(sc, {-1.0});
  ASSERT_EQ(bad.size(), 1u);
  EXPECT_FALSE(bad[0].report.success);
  EXPECT_NE(bad[0].report.error.find("delta"), std::string::npos);
}

TEST(Harness, CompareModesRunsBoth) {
  const auto cmp = compare_modes(single_agent());
  EXPECT_TRUE(cmp.hard.success);
  EXPECT_TRUE(cmp.soft.success);
  EXPECT_EQ(cmp.soft.max_slack, 0.0);
  EXPECT_NEAR(cmp.hard.cost, cmp.soft.cost, 1e-6 * std::max(1.0, cmp.hard.cost));
}

}  // namespace
}  // namespace dmpc
