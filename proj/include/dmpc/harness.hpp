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

// Closed-loop receding-horizon driver: plan, run consensus, apply the first
// consensus input of every agent, log, repeat.

#ifndef DMPC_HARNESS_HPP
#define DMPC_HARNESS_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dmpc/consensus.hpp"
#include "dmpc/local_solver.hpp"
#include "dmpc/planner.hpp"

namespace dmpc {

enum class PlannerPolicy { kEveryStep, kOnFailure, kNone };

const char* to_string(PlannerPolicy policy);

struct AgentSpec {
  Eigen::VectorXd start;  // [position; velocity]
  Eigen::VectorXd goal;   // [position; velocity]
};

struct Scenario {
  std::string name = "scenario";
  int n = 2;
  std::vector<AgentSpec> agents;
  double dt = 0.1;
  int horizon = 10;
  double delta = 0.1;
  ConstraintMode mode = ConstraintMode::kHard;
  double q_scale = 0.1;
  double r_scale = 1.0;
  double qf_scale = 1.0;
  double kappa = 100.0;
  /// Certified-distance margin in hard mode.
  double d_min = 0.01;
  AdmmConfig admm;
  PlannerConfig planner;
  PlannerPolicy planner_policy = PlannerPolicy::kEveryStep;
  /// Retry a step in soft mode after a hard-mode infeasibility event.
  bool soft_fallback = true;
  /// Hard mode: nudge applied first inputs so every pair stays delta + d_min
  /// apart one step past the next positions.
  bool separation_filter = true;
  std::optional<BoxBounds> input_bounds;
  int max_steps = 300;
  double goal_tol_pos = 0.05;
  double goal_tol_vel = 0.05;
  std::uint64_t seed = 1;

  int num_agents() const { return static_cast<int>(agents.size()); }
};

/// Throws std::invalid_argument naming the violated condition.
void validate(const Scenario& sc);

struct StepLog {
  int step = 0;
  std::vector<Eigen::VectorXd> inputs;
  std::vector<Eigen::VectorXd> states;  // after applying the inputs
  int admm_rounds = 0;
  double residual = 0.0;
  bool admm_converged = false;
  double min_dist = std::numeric_limits<double>::infinity();
  std::vector<SolveStatus> statuses;
  /// The step was re-solved in soft mode after a hard-mode infeasibility event.
  bool soft_fallback = false;
  double max_slack = 0.0;
  /// Sum over agents and neighbors of the slack at the first predicted step.
  double applied_slack = 0.0;
  /// Pairs whose applied inputs were adjusted by the separation filter.
  int filtered_pairs = 0;
  std::vector<double> residual_history;
  double wall_time = 0.0;
};

struct RunReport {
  std::string scenario;
  bool success = false;
  int steps = 0;
  double cost = 0.0;
  double cost_with_slack = 0.0;
  double min_dist = std::numeric_limits<double>::infinity();
  double max_slack = 0.0;
  int infeasibility_events = 0;
  int filter_activations = 0;
  double mean_rounds = 0.0;
  double final_goal_error = 0.0;
  std::string error;
  double total_time = 0.0;
  double mean_time = 0.0;
  std::vector<StepLog> log;
};

struct CollisionMetrics {
  double min_inf_dist = std::numeric_limits<double>::infinity();
  std::vector<std::pair<int, int>> violating_pairs;
};

/// Pairwise infinity-norm distances between positions; pairs closer than
/// delta are listed.
CollisionMetrics collision_metrics(const std::vector<Eigen::VectorXd>& positions, double delta);

bool goal_reached(const std::vector<Eigen::VectorXd>& states,
                  const std::vector<Eigen::VectorXd>& goals, double tol_pos, double tol_vel);

RunReport run_dmpc(const Scenario& sc);

struct SweepEntry {
  double delta = 0.0;
  RunReport report;
};

std::vector<SweepEntry> sweep_delta(const Scenario& sc, const std::vector<double>& deltas);

struct ModeComparison {
  RunReport hard;
  RunReport soft;
};

ModeComparison compare_modes(const Scenario& sc);

}  // namespace dmpc

#endif  // DMPC_HARNESS_HPP
