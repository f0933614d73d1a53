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

#include "dmpc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "dmpc/costs.hpp"

namespace dmpc {

const char* to_string(PlannerPolicy policy) {
  switch (policy) {
    case PlannerPolicy::kEveryStep:
      return "every_step";
    case PlannerPolicy::kOnFailure:
      return "on_failure";
    case PlannerPolicy::kNone:
      return "none";
  }
  return "unknown";
}

void validate(const Scenario& sc) {
  const int n = sc.n;
  if (n != 2 && n != 3) throw std::invalid_argument("scenario: n must be 2 or 3");
  if (sc.agents.empty()) throw std::invalid_argument("scenario: at least one agent required");
  if (!(sc.dt > 0)) throw std::invalid_argument("scenario: dt must be > 0");
  if (sc.horizon < 1) throw std::invalid_argument("scenario: horizon must be >= 1");
  if (!(sc.delta > 0)) throw std::invalid_argument("scenario: delta must be > 0");
  if (!(sc.q_scale >= 0) || !(sc.qf_scale >= 0) || !(sc.r_scale > 0) || !(sc.kappa >= 0)) {
    throw std::invalid_argument("scenario: weights need q, qf >= 0, r > 0, kappa >= 0");
  }
  if (!(sc.d_min >= 0)) throw std::invalid_argument("scenario: d_min must be >= 0");
  if (sc.max_steps < 1) throw std::invalid_argument("scenario: max_steps must be >= 1");
  if (!(sc.goal_tol_pos > 0) || !(sc.goal_tol_vel > 0)) {
    throw std::invalid_argument("scenario: goal tolerances must be > 0");
  }
  validate(sc.admm);
  validate(sc.planner, n);
  if (sc.input_bounds && (sc.input_bounds->lower.size() != n || sc.input_bounds->upper.size() != n ||
                          (sc.input_bounds->lower.array() > sc.input_bounds->upper.array()).any())) {
    throw std::invalid_argument("scenario: input bounds must have size n and lower <= upper");
  }
  for (int i = 0; i < sc.num_agents(); ++i) {
    const auto& a = sc.agents[i];
    if (a.start.size() != 2 * n || a.goal.size() != 2 * n || !a.start.allFinite() ||
        !a.goal.allFinite()) {
      throw std::invalid_argument("scenario: agent " + std::to_string(i) +
                                  " start/goal must be finite states of size 2n");
    }
  }
  for (int i = 0; i < sc.num_agents(); ++i) {
    for (int j = i + 1; j < sc.num_agents(); ++j) {
      const double d =
          (sc.agents[i].start.head(n) - sc.agents[j].start.head(n)).cwiseAbs().maxCoeff();
      if (!(d > sc.delta)) {
        throw std::invalid_argument("scenario: starts of agents " + std::to_string(i) + " and " +
                                    std::to_string(j) + " are not separated by more than delta");
      }
    }
  }
}

CollisionMetrics collision_metrics(const std::vector<Eigen::VectorXd>& positions, double delta) {
  CollisionMetrics out;
  const int M = static_cast<int>(positions.size());
  for (int i = 0; i < M; ++i) {
    for (int j = i + 1; j < M; ++j) {
      const double d = (positions[i] - positions[j]).cwiseAbs().maxCoeff();
      out.min_inf_dist = std::min(out.min_inf_dist, d);
      if (d < delta) out.violating_pairs.emplace_back(i, j);
    }
  }
  return out;
}

bool goal_reached(const std::vector<Eigen::VectorXd>& states,
                  const std::vector<Eigen::VectorXd>& goals, double tol_pos, double tol_vel) {
  if (states.size() != goals.size()) throw std::invalid_argument("goal_reached: size mismatch");
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Eigen::Index n = states[i].size() / 2;
    if (goals[i].size() < n) throw std::invalid_argument("goal_reached: goal dimension");
    if ((states[i].head(n) - goals[i].head(n)).norm() > tol_pos) return false;
    if (states[i].tail(n).norm() > tol_vel) return false;
  }
  return true;
}

namespace {

std::vector<Eigen::VectorXd> positions_of(const std::vector<Eigen::VectorXd>& states, int n) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& s : states) out.emplace_back(s.head(n));
  return out;
}

// RRT guesses for every agent, stacked into one copy vector shared by all.
CopyVector planned_guess(const Scenario& sc, const std::vector<Eigen::VectorXd>& states, int step) {
  const int M = sc.num_agents();
  const int n = sc.n;
  CopyVector guess(StackLayout{M, sc.horizon, n});
  auto plan_one = [&](int i) {
    std::vector<Polytope> obstacles;
    for (int j = 0; j < M; ++j) {
      if (j == i) continue;
      Polytope o = placed_cube(AgentCube{states[j].head(n), 2.0 * sc.delta});
      if (!contains(o, Eigen::VectorXd(states[i].head(n)))) obstacles.push_back(std::move(o));
    }
    PlannerConfig cfg = sc.planner;
    cfg.seed = derive_seed(sc.seed, i, step);
    const Eigen::VectorXd start = states[i].head(n);
    const Eigen::VectorXd goal = sc.agents[i].goal.head(n);
    cfg.workspace.lower = cfg.workspace.lower.cwiseMin(start).cwiseMin(goal);
    cfg.workspace.upper = cfg.workspace.upper.cwiseMax(start).cwiseMax(goal);
    const PlannedPath path = rrt_plan(start, goal, obstacles, cfg);
    Trajectory t = initial_guess_from_path(path, sc.horizon, sc.dt, states[i].tail(n));
    t.states[0] = states[i];
    return t;
  };
  std::vector<Trajectory> trajs(M);
  if (sc.admm.parallel && M > 1) {
    std::vector<std::future<Trajectory>> jobs;
    for (int i = 0; i < M; ++i) jobs.push_back(std::async(std::launch::async, plan_one, i));
    for (int i = 0; i < M; ++i) trajs[i] = jobs[i].get();
  } else {
    for (int i = 0; i < M; ++i) trajs[i] = plan_one(i);
  }
  for (int i = 0; i < M; ++i) guess.set_trajectory(i, trajs[i]);
  return guess;
}

struct ConsensusState {
  bool first = true;
  CopyVector v_bar;
  std::vector<Multiplier> gamma;
  std::vector<CopyVector> own_copy;
  std::vector<CertificateSet> certificates;
  bool last_ok = true;
};

CertificateSet shifted(const CertificateSet& c) {
  CertificateSet out = c;
  const int N = c.horizon();
  for (int j = 0; j < c.agents(); ++j) {
    for (int k = 1; k < N; ++k) out.at(j, k) = c.at(j, k + 1);
  }
  return out;
}

std::vector<LocalProblem> build_problems(const Scenario& sc,
                                         const std::vector<Eigen::VectorXd>& states,
                                         const ConsensusState& cs, ConstraintMode mode,
                                         double d_min) {
  const int M = sc.num_agents();
  const auto model = make_discrete_double_integrator(sc.n, sc.dt);
  const auto w = scaled_weights(sc.n, sc.q_scale, sc.r_scale, sc.qf_scale, sc.kappa);
  std::vector<LocalProblem> out;
  for (int i = 0; i < M; ++i) {
    LocalProblem p = make_local_problem(i, M, model, sc.horizon, states[i],
                                        GoalSpec{sc.agents[i].goal}, w, sc.delta, mode,
                                        sc.admm.rho);
    p.thresholds.d_min = d_min;
    p.input_bounds = sc.input_bounds;
    if (!cs.first) {
      p.v_bar = shifted(cs.v_bar);
      p.gamma = shifted(cs.gamma[i]);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<LocalWarmStart> build_warm(const Scenario& sc, const std::vector<LocalProblem>& problems,
                                       const std::vector<Eigen::VectorXd>& states,
                                       const ConsensusState& cs, int step) {
  const int M = sc.num_agents();
  std::vector<LocalWarmStart> warm(M);
  const bool plan = sc.planner_policy == PlannerPolicy::kEveryStep ||
                    (sc.planner_policy == PlannerPolicy::kOnFailure && (cs.first || !cs.last_ok));
  // A guess that already collides is dropped once a previous consensus exists;
  // the shifted consensus is the better start then.
  const auto collides = [&](const CopyVector& g) {
    for (int k = 1; k <= sc.horizon; ++k) {
      std::vector<Eigen::VectorXd> pos;
      for (int i = 0; i < M; ++i) pos.emplace_back(g.position(i, k));
      if (collision_metrics(pos, sc.delta).min_inf_dist < sc.delta) return true;
    }
    return false;
  };
  if (plan) {
    const CopyVector guess = planned_guess(sc, states, step);
    if (cs.first || !collides(guess)) {
      for (int i = 0; i < M; ++i) {
        warm[i].v = guess;
        warm[i].certificates = initial_certificates(problems[i], guess);
      }
    }
  } else if (sc.planner_policy == PlannerPolicy::kOnFailure) {
    for (int i = 0; i < M; ++i) warm[i].v = shifted(cs.own_copy[i]);
  }
  if (!cs.first) {
    for (int i = 0; i < M; ++i) warm[i].certificates = shifted(cs.certificates[i]);
  }
  return warm;
}

// Certificates at step 1 cannot be met in hard mode when the next positions,
// fixed by the current velocities, already overlap.
double next_positions_distance(const Scenario& sc, const std::vector<Eigen::VectorXd>& states) {
  std::vector<Eigen::VectorXd> next;
  for (const auto& s : states) next.emplace_back(s.head(sc.n) + sc.dt * s.tail(sc.n));
  return collision_metrics(next, sc.delta).min_inf_dist;
}

// Smallest symmetric change of the first inputs that keeps every pair apart,
// along the axis currently separating it, one step beyond the fixed next
// positions. Returns the number of corrected pairs.
int separate_inputs(const Scenario& sc, const std::vector<Eigen::VectorXd>& states,
                    std::vector<Eigen::VectorXd>& inputs, double clearance) {
  const int M = sc.num_agents();
  const int n = sc.n;
  const double dt = sc.dt;
  std::vector<Eigen::VectorXd> p1(M), base(M);
  for (int i = 0; i < M; ++i) {
    p1[i] = states[i].head(n) + dt * states[i].tail(n);
    base[i] = states[i].head(n) + 2.0 * dt * states[i].tail(n);
  }
  int corrected = 0;
  for (int sweep = 0; sweep < 50; ++sweep) {
    bool changed = false;
    for (int i = 0; i < M; ++i) {
      for (int j = i + 1; j < M; ++j) {
        const Eigen::VectorXd r1 = p1[i] - p1[j];
        Eigen::Index axis;
        r1.cwiseAbs().maxCoeff(&axis);
        const double sign = r1(axis) >= 0 ? 1.0 : -1.0;
        const double sep = sign * ((base[i](axis) + dt * dt * inputs[i](axis)) -
                                   (base[j](axis) + dt * dt * inputs[j](axis)));
        const double need = clearance - sep;
        if (need <= 1e-12) continue;
        const double du = 0.5 * (need + 1e-9) / (dt * dt);
        inputs[i](axis) += sign * du;
        inputs[j](axis) -= sign * du;
        changed = true;
        if (sweep == 0) ++corrected;
      }
    }
    if (!changed) break;
  }
  return corrected;
}

}  // namespace

RunReport run_dmpc(const Scenario& sc) {
  validate(sc);
  const int M = sc.num_agents();
  const int n = sc.n;
  const auto model = make_discrete_double_integrator(n, sc.dt);
  const auto w = scaled_weights(n, sc.q_scale, sc.r_scale, sc.qf_scale, sc.kappa);

  RunReport rep;
  rep.scenario = sc.name;
  std::vector<Eigen::VectorXd> states, goals;
  for (const auto& a : sc.agents) {
    states.push_back(a.start);
    goals.push_back(a.goal);
  }
  ConsensusState cs;
  long total_rounds = 0;

  for (int step = 0; step < sc.max_steps; ++step) {
    if (goal_reached(states, goals, sc.goal_tol_pos, sc.goal_tol_vel)) break;
    const auto t0 = std::chrono::steady_clock::now();
    StepLog log;
    log.step = step;

    ConstraintMode mode = sc.mode;
    bool event = false;
    // The margin cannot exceed what the next positions, fixed by the current
    // velocities, already provide.
    double d_min = sc.d_min;
    if (mode == ConstraintMode::kHard) {
      const double gap = next_positions_distance(sc, states) - sc.delta;
      if (gap < -1e-3) event = true;
      d_min = std::clamp(gap - 1e-6, 0.0, sc.d_min);
    }

    std::optional<AdmmResult> res;
    std::vector<LocalProblem> problems;
    if (!event) {
      problems = build_problems(sc, states, cs, mode, d_min);
      auto warm = build_warm(sc, problems, states, cs, step);
      res = run_admm(problems, std::move(warm), sc.admm);
      if (mode == ConstraintMode::kHard && res->infeasible) event = true;
    }
    if (event) {
      ++rep.infeasibility_events;
      spdlog::info("{}: hard-mode infeasibility at step {}", sc.name, step);
      if (!sc.soft_fallback) {
        rep.error = "hard-mode infeasibility at step " + std::to_string(step) +
                    " and soft fallback is disabled";
        break;
      }
      mode = ConstraintMode::kSoft;
      log.soft_fallback = true;
      problems = build_problems(sc, states, cs, mode, d_min);
      auto warm = build_warm(sc, problems, states, cs, step);
      res = run_admm(problems, std::move(warm), sc.admm);
    }

    const AdmmResult& r = *res;
    log.admm_rounds = r.rounds;
    log.admm_converged = r.converged;
    log.residual = r.history.back().primal;
    for (const auto& h : r.history) log.residual_history.push_back(h.primal);
    total_rounds += r.rounds;

    std::vector<Eigen::VectorXd> applied(M);
    for (int i = 0; i < M; ++i) applied[i] = r.consensus.input(i, 0);
    if (sc.separation_filter && sc.mode == ConstraintMode::kHard) {
      log.filtered_pairs = separate_inputs(sc, states, applied, sc.delta + sc.d_min);
      if (log.filtered_pairs > 0) {
        ++rep.filter_activations;
        spdlog::debug("{}: separation filter adjusted {} pairs at step {}", sc.name,
                      log.filtered_pairs, step);
      }
    }
    std::vector<Eigen::VectorXd> next(M);
    for (int i = 0; i < M; ++i) {
      const Eigen::VectorXd& u = applied[i];
      rep.cost += stage_cost(states[i], u, GoalSpec{goals[i]}, w);
      next[i] = dmpc::step(model, states[i], u);
      log.inputs.push_back(u);
      const LocalSolution& s = r.solutions[i];
      log.statuses.push_back(s.status);
      log.max_slack = std::max(log.max_slack, s.max_slack);
      if (mode == ConstraintMode::kSoft) {
        for (int j = 0; j < M; ++j) {
          if (j != i) log.applied_slack += s.certificates.at(j, 1).alpha;
        }
      }
    }
    states = next;
    log.states = states;
    log.min_dist = collision_metrics(positions_of(states, n), sc.delta).min_inf_dist;
    rep.min_dist = std::min(rep.min_dist, log.min_dist);
    rep.max_slack = std::max(rep.max_slack, log.max_slack);
    rep.cost_with_slack += sc.kappa * log.applied_slack;

    cs.first = false;
    cs.v_bar = r.consensus;
    cs.gamma = r.gamma;
    cs.own_copy.clear();
    for (const auto& s : r.solutions) cs.own_copy.push_back(s.v_plus);
    cs.certificates.clear();
    for (const auto& s : r.solutions) cs.certificates.push_back(s.certificates);
    cs.last_ok = r.converged && !log.soft_fallback;

    log.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.total_time += log.wall_time;
    rep.log.push_back(std::move(log));
  }

  for (int i = 0; i < M; ++i) rep.cost += terminal_cost(states[i], GoalSpec{goals[i]}, w);
  rep.cost_with_slack += rep.cost;
  rep.steps = static_cast<int>(rep.log.size());
  rep.success = rep.error.empty() && goal_reached(states, goals, sc.goal_tol_pos, sc.goal_tol_vel);
  for (int i = 0; i < M; ++i) {
    rep.final_goal_error =
        std::max(rep.final_goal_error, (states[i].head(n) - goals[i].head(n)).norm());
  }
  if (rep.steps > 0) {
    rep.mean_rounds = static_cast<double>(total_rounds) / rep.steps;
    rep.mean_time = rep.total_time / rep.steps;
  }
  return rep;
}

std::vector<SweepEntry> sweep_delta(const Scenario& sc, const std::vector<double>& deltas) {
  std::vector<SweepEntry> out;
  for (double d : deltas) {
    SweepEntry e;
    e.delta = d;
    Scenario s = sc;
    s.delta = d;
    try {
      e.report = run_dmpc(s);
    } catch (const std::exception& ex) {
      e.report.scenario = sc.name;
      e.report.error = ex.what();
    }
    out.push_back(std::move(e));
  }
  return out;
}

ModeComparison compare_modes(const Scenario& sc) {
  ModeComparison out;
  Scenario hard = sc;
  hard.mode = ConstraintMode::kHard;
  Scenario soft = sc;
  soft.mode = ConstraintMode::kSoft;
  out.hard = run_dmpc(hard);
  out.soft = run_dmpc(soft);
  return out;
}

}  // namespace dmpc
