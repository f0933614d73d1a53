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

#include "dmpc/planner.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <stdexcept>

namespace dmpc {

void validate(const PlannerConfig& cfg, int n) {
  if (!(cfg.step > 0)) throw std::invalid_argument("PlannerConfig: step must be > 0");
  if (!(cfg.goal_bias >= 0 && cfg.goal_bias <= 1)) {
    throw std::invalid_argument("PlannerConfig: goal_bias must lie in [0, 1]");
  }
  if (cfg.max_iters < 0) throw std::invalid_argument("PlannerConfig: max_iters must be >= 0");
  if (!(cfg.goal_tolerance >= 0)) {
    throw std::invalid_argument("PlannerConfig: goal_tolerance must be >= 0");
  }
  if (cfg.workspace.lower.size() != n || cfg.workspace.upper.size() != n ||
      (cfg.workspace.lower.array() > cfg.workspace.upper.array()).any()) {
    throw std::invalid_argument("PlannerConfig: workspace must have size n and lower <= upper");
  }
}

std::uint64_t derive_seed(std::uint64_t run_seed, int agent, int step) {
  // splitmix64 finalizer over a simple combination.
  std::uint64_t z = run_seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(agent) + 1)) ^
                    (0xBF58476D1CE4E5B9ULL * (static_cast<std::uint64_t>(step) + 1));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double unit_uniform(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

namespace {

bool inside_box(const BoxBounds& box, const Eigen::VectorXd& p) {
  return (p.array() >= box.lower.array()).all() && (p.array() <= box.upper.array()).all();
}

bool free_point(const Eigen::VectorXd& p, const BoxBounds& box,
                std::span<const Polytope> obstacles) {
  if (!inside_box(box, p)) return false;
  for (const auto& o : obstacles) {
    if (contains(o, p)) return false;
  }
  return true;
}

}  // namespace

PlannedPath rrt_plan(const Eigen::VectorXd& start, const Eigen::VectorXd& goal,
                     std::span<const Polytope> obstacles, const PlannerConfig& cfg) {
  const int n = static_cast<int>(start.size());
  validate(cfg, n);
  if (goal.size() != n) throw std::invalid_argument("rrt_plan: goal dimension mismatch");
  for (const auto& o : obstacles) {
    if (o.dim() != n) throw std::invalid_argument("rrt_plan: obstacle dimension mismatch");
    if (contains(o, start)) throw std::invalid_argument("rrt_plan: start lies inside an obstacle");
  }
  if (!inside_box(cfg.workspace, start)) {
    throw std::invalid_argument("rrt_plan: start lies outside the workspace");
  }

  std::vector<Eigen::VectorXd> nodes{start};
  std::vector<int> parent{-1};
  int best = 0;
  double best_dist = (start - goal).norm();

  auto finish = [&](int leaf, bool reached) {
    PlannedPath path;
    path.reached_goal = reached;
    for (int k = leaf; k >= 0; k = parent[k]) path.waypoints.push_back(nodes[k]);
    std::reverse(path.waypoints.begin(), path.waypoints.end());
    return path;
  };
  if (best_dist <= cfg.goal_tolerance) return finish(0, true);

  std::mt19937_64 rng(cfg.seed);
  const Eigen::VectorXd span = cfg.workspace.upper - cfg.workspace.lower;
  Eigen::VectorXd sample(n);
  for (int it = 0; it < cfg.max_iters; ++it) {
    if (unit_uniform(rng()) < cfg.goal_bias) {
      sample = goal;
    } else {
      for (int d = 0; d < n; ++d) sample(d) = cfg.workspace.lower(d) + unit_uniform(rng()) * span(d);
    }
    int near = 0;
    double near_dist = std::numeric_limits<double>::infinity();
    for (int k = 0; k < static_cast<int>(nodes.size()); ++k) {
      const double d = (nodes[k] - sample).squaredNorm();
      if (d < near_dist) {
        near_dist = d;
        near = k;
      }
    }
    near_dist = std::sqrt(near_dist);
    if (near_dist <= 0) continue;
    const Eigen::VectorXd next =
        near_dist <= cfg.step ? Eigen::VectorXd(sample)
                              : Eigen::VectorXd(nodes[near] + (cfg.step / near_dist) *
                                                                  (sample - nodes[near]));
    const Eigen::VectorXd mid = 0.5 * (next + nodes[near]);
    if (!free_point(next, cfg.workspace, obstacles) ||
        !free_point(mid, cfg.workspace, obstacles)) {
      continue;
    }
    nodes.push_back(next);
    parent.push_back(near);
    const int id = static_cast<int>(nodes.size()) - 1;
    const double d = (next - goal).norm();
    if (d < best_dist) {
      best_dist = d;
      best = id;
    }
    if (d <= cfg.goal_tolerance) return finish(id, true);
  }
  return finish(best, false);
}

Trajectory initial_guess_from_path(const PlannedPath& path, int horizon, double dt,
                                   const Eigen::VectorXd& v0) {
  if (path.waypoints.empty()) throw std::invalid_argument("initial_guess_from_path: empty path");
  if (horizon < 1 || !(dt > 0)) {
    throw std::invalid_argument("initial_guess_from_path: need horizon >= 1 and dt > 0");
  }
  const int n = static_cast<int>(path.waypoints.front().size());
  std::vector<Eigen::VectorXd> p;
  for (int k = 0; k <= horizon; ++k) {
    p.push_back(path.waypoints[std::min<std::size_t>(k, path.waypoints.size() - 1)]);
  }
  std::vector<Eigen::VectorXd> v(horizon + 1, Eigen::VectorXd::Zero(n));
  if (v0.size() == n) v[0] = v0;
  for (int k = 1; k < horizon; ++k) v[k] = (p[k + 1] - p[k - 1]) / (2.0 * dt);

  Trajectory t;
  for (int k = 0; k <= horizon; ++k) {
    Eigen::VectorXd s(2 * n);
    s << p[k], v[k];
    t.states.push_back(std::move(s));
  }
  for (int k = 0; k < horizon; ++k) t.inputs.push_back((v[k + 1] - v[k]) / dt);
  return t;
}

}  // namespace dmpc
