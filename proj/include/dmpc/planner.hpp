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

// Position-space RRT used to seed the local solvers.

#ifndef DMPC_PLANNER_HPP
#define DMPC_PLANNER_HPP

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dmpc/dynamics.hpp"
#include "dmpc/geometry.hpp"
#include "dmpc/local_solver.hpp"

namespace dmpc {

struct PlannerConfig {
  BoxBounds workspace;
  double step = 0.2;
  double goal_bias = 0.1;
  int max_iters = 5000;
  double goal_tolerance = 0.1;
  std::uint64_t seed = 0;
};

void validate(const PlannerConfig& cfg, int n);

struct PlannedPath {
  std::vector<Eigen::VectorXd> waypoints;
  bool reached_goal = false;
};

/// Grows a tree from start until a node lands within the goal tolerance.
/// Waypoints and segment midpoints stay inside the workspace and outside every
/// obstacle. On exhaustion the branch ending closest to the goal is returned.
PlannedPath rrt_plan(const Eigen::VectorXd& start, const Eigen::VectorXd& goal,
                     std::span<const Polytope> obstacles, const PlannerConfig& cfg);

/// Turns the first N+1 waypoints (padded with the last one) into a state and
/// input guess. Interior velocities are central differences, the end velocity
/// is zero and the start velocity is `v0` (zero if empty); inputs are forward
/// differences of the velocities.
Trajectory initial_guess_from_path(const PlannedPath& path, int horizon, double dt,
                                   const Eigen::VectorXd& v0 = {});

/// Per-(agent, step) seed derived from the run seed.
std::uint64_t derive_seed(std::uint64_t run_seed, int agent, int step);

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw, so the
/// sequence does not depend on the standard library's distributions.
double unit_uniform(std::uint64_t bits);

}  // namespace dmpc

#endif  // DMPC_PLANNER_HPP
