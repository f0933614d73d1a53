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


#include "dmpc/scenario_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace dmpc {

namespace {

// Shortest text that reads back to the same double.
std::string num(double x) {
  if (std::isnan(x)) return ".nan";
  if (std::isinf(x)) return x > 0 ? ".inf" : "-.inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  std::string s(buf, res.ptr);
  // Keep it a float for YAML readers that care.
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::string where(const std::string& source, const YAML::Mark& m) {
  if (m.is_null()) return source + " (override)";
  return source + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1);
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& what) const {
    throw ScenarioError(where(source_, node.Mark()) + ": " + what);
  }

  void expect_map(const YAML::Node& node, const std::string& ctx) const {
    if (!node.IsMap()) fail(node, ctx + " must be a mapping");
  }

  void allow_keys(const YAML::Node& node, const std::string& ctx,
                  const std::set<std::string>& keys) const {
    expect_map(node, ctx);
    for (const auto& kv : node) {
      const std::string k = kv.first.as<std::string>();
      if (!keys.count(k)) {
        throw ScenarioError(where(source_, kv.first.Mark()) + ": unknown key '" +
                            (ctx.empty() ? k : ctx + "." + k) + "'");
      }
    }
  }

  template <typename T>
  void get(const YAML::Node& map, const char* key, T& out, const std::string& ctx) const {
    const YAML::Node v = map[key];
    if (!v) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      fail(v, "bad value for '" + ctx + key + "'");
    }
  }

  Eigen::VectorXd vec(const YAML::Node& v, const std::string& what) const {
    if (!v.IsSequence()) fail(v, what + " must be a list of numbers");
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      try {
        out(static_cast<Eigen::Index>(i)) = v[i].as<double>();
      } catch (const YAML::Exception&) {
        fail(v[i], what + " must be a list of numbers");
      }
    }
    return out;
  }

  BoxBounds box(const YAML::Node& v, const std::string& ctx) const {
    allow_keys(v, ctx, {"lower", "upper"});
    if (!v["lower"] || !v["upper"]) fail(v, ctx + " needs lower and upper");
    return {vec(v["lower"], ctx + ".lower"), vec(v["upper"], ctx + ".upper")};
  }

  Eigen::VectorXd state(const YAML::Node& v, const std::string& ctx, int n) const {
    allow_keys(v, ctx, {"position", "velocity"});
    if (!v["position"]) fail(v, ctx + ".position is required");
    const Eigen::VectorXd p = vec(v["position"], ctx + ".position");
    if (p.size() != n) fail(v["position"], ctx + ".position must have " + std::to_string(n) + " entries");
    Eigen::VectorXd vel = Eigen::VectorXd::Zero(n);
    if (v["velocity"]) {
      vel = vec(v["velocity"], ctx + ".velocity");
      if (vel.size() != n) fail(v["velocity"], ctx + ".velocity must have " + std::to_string(n) + " entries");
    }
    Eigen::VectorXd s(2 * n);
    s << p, vel;
    return s;
  }

 private:
  std::string source_;
};

Scenario from_node(const YAML::Node& root, const std::string& source) {
  Reader rd(source);
  rd.allow_keys(root, "",
                {"name", "dimension", "dt", "horizon", "delta", "mode", "weights", "d_min",
                 "soft_fallback", "separation_filter", "max_steps", "goal_tolerance", "seed",
                 "input_bounds", "admm", "planner", "agents"});
  Scenario sc;
  rd.get(root, "name", sc.name, "");
  rd.get(root, "dimension", sc.n, "");
  if (sc.n != 2 && sc.n != 3) rd.fail(root["dimension"], "dimension must be 2 or 3");
  rd.get(root, "dt", sc.dt, "");
  rd.get(root, "horizon", sc.horizon, "");
  rd.get(root, "delta", sc.delta, "");
  if (const YAML::Node m = root["mode"]) {
    const std::string s = m.as<std::string>();
    if (s == "hard") {
      sc.mode = ConstraintMode::kHard;
    } else if (s == "soft") {
      sc.mode = ConstraintMode::kSoft;
    } else {
      rd.fail(m, "mode must be hard or soft");
    }
  }
  if (const YAML::Node w = root["weights"]) {
    rd.allow_keys(w, "weights", {"q", "r", "qf", "kappa"});
    rd.get(w, "q", sc.q_scale, "weights.");
    rd.get(w, "r", sc.r_scale, "weights.");
    rd.get(w, "qf", sc.qf_scale, "weights.");
    rd.get(w, "kappa", sc.kappa, "weights.");
  }
  rd.get(root, "d_min", sc.d_min, "");
  rd.get(root, "soft_fallback", sc.soft_fallback, "");
  rd.get(root, "separation_filter", sc.separation_filter, "");
  rd.get(root, "max_steps", sc.max_steps, "");
  if (const YAML::Node g = root["goal_tolerance"]) {
    rd.allow_keys(g, "goal_tolerance", {"position", "velocity"});
    rd.get(g, "position", sc.goal_tol_pos, "goal_tolerance.");
    rd.get(g, "velocity", sc.goal_tol_vel, "goal_tolerance.");
  }
  rd.get(root, "seed", sc.seed, "");
  if (const YAML::Node b = root["input_bounds"]) sc.input_bounds = rd.box(b, "input_bounds");

  if (const YAML::Node a = root["admm"]) {
    rd.allow_keys(a, "admm", {"rho", "max_rounds", "tolerance", "parallel", "harmonize", "solver"});
    rd.get(a, "rho", sc.admm.rho, "admm.");
    rd.get(a, "max_rounds", sc.admm.max_rounds, "admm.");
    rd.get(a, "tolerance", sc.admm.tolerance, "admm.");
    rd.get(a, "parallel", sc.admm.parallel, "admm.");
    rd.get(a, "harmonize", sc.admm.harmonize, "admm.");
    if (const YAML::Node s = a["solver"]) {
      auto& o = sc.admm.solver;
      rd.allow_keys(s, "admm.solver",
                    {"max_outer_iters", "max_inner_iters", "constraint_tolerance",
                     "stationarity_tolerance", "initial_penalty", "penalty_growth", "max_penalty",
                     "fd_step"});
      const std::string c = "admm.solver.";
      rd.get(s, "max_outer_iters", o.max_outer_iters, c);
      rd.get(s, "max_inner_iters", o.max_inner_iters, c);
      rd.get(s, "constraint_tolerance", o.constraint_tolerance, c);
      rd.get(s, "stationarity_tolerance", o.stationarity_tolerance, c);
      rd.get(s, "initial_penalty", o.initial_penalty, c);
      rd.get(s, "penalty_growth", o.penalty_growth, c);
      rd.get(s, "max_penalty", o.max_penalty, c);
      rd.get(s, "fd_step", o.fd_step, c);
    }
  }

  const YAML::Node agents = root["agents"];
  if (!agents || !agents.IsSequence() || agents.size() == 0) {
    rd.fail(agents ? agents : root, "agents must be a non-empty list");
  }
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string ctx = "agents." + std::to_string(i);
    const YAML::Node a = agents[i];
    rd.allow_keys(a, ctx, {"start", "goal"});
    if (!a["start"] || !a["goal"]) rd.fail(a, ctx + " needs start and goal");
    AgentSpec spec;
    spec.start = rd.state(a["start"], ctx + ".start", sc.n);
    spec.goal = rd.state(a["goal"], ctx + ".goal", sc.n);
    sc.agents.push_back(std::move(spec));
  }

  // Default workspace: box around all starts and goals, one meter of margin.
  Eigen::VectorXd lo = sc.agents.front().start.head(sc.n), hi = lo;
  for (const auto& a : sc.agents) {
    lo = lo.cwiseMin(a.start.head(sc.n)).cwiseMin(a.goal.head(sc.n));
    hi = hi.cwiseMax(a.start.head(sc.n)).cwiseMax(a.goal.head(sc.n));
  }
  sc.planner.workspace = {lo.array() - 1.0, hi.array() + 1.0};
  if (const YAML::Node p = root["planner"]) {
    rd.allow_keys(p, "planner",
                  {"policy", "workspace", "step", "goal_bias", "max_iters", "goal_tolerance"});
    if (const YAML::Node pol = p["policy"]) {
      const std::string s = pol.as<std::string>();
      if (s == "every_step") {
        sc.planner_policy = PlannerPolicy::kEveryStep;
      } else if (s == "on_failure") {
        sc.planner_policy = PlannerPolicy::kOnFailure;
      } else if (s == "none") {
        sc.planner_policy = PlannerPolicy::kNone;
      } else {
        rd.fail(pol, "planner.policy must be every_step, on_failure or none");
      }
    }
    if (const YAML::Node w = p["workspace"]) sc.planner.workspace = rd.box(w, "planner.workspace");
    rd.get(p, "step", sc.planner.step, "planner.");
    rd.get(p, "goal_bias", sc.planner.goal_bias, "planner.");
    rd.get(p, "max_iters", sc.planner.max_iters, "planner.");
    rd.get(p, "goal_tolerance", sc.planner.goal_tolerance, "planner.");
  }

  try {
    validate(sc);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(source + ": " + e.what());
  }
  return sc;
}

void apply(YAML::Node& root, const Override& ov, const std::string& source) {
  YAML::Node cur = root;
  std::stringstream ss(ov.key);
  std::string tok;
  std::vector<std::string> parts;
  while (std::getline(ss, tok, '.')) parts.push_back(tok);
  if (parts.empty() || ov.key.empty()) throw ScenarioError("--set: empty key");
  YAML::Node value;
  try {
    value = YAML::Load(ov.value);
  } catch (const YAML::Exception& e) {
    throw ScenarioError("--set " + ov.key + ": " + e.msg);
  }
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& p = parts[i];
    const bool last = i + 1 == parts.size();
    if (cur.IsSequence()) {
      std::size_t idx = 0;
      const auto r = std::from_chars(p.data(), p.data() + p.size(), idx);
      if (r.ec != std::errc() || r.ptr != p.data() + p.size() || idx >= cur.size()) {
        throw ScenarioError(source + ": --set " + ov.key + ": bad list index '" + p + "'");
      }
      if (last) {
        cur[idx] = value;
      } else {
        cur.reset(cur[idx]);
      }
    } else {
      if (last) {
        cur[p] = value;
      } else {
        if (!cur[p]) cur[p] = YAML::Node(YAML::NodeType::Map);
        cur.reset(cur[p]);
      }
    }
  }
}

YAML::Node vec_node(const Eigen::VectorXd& v) {
  YAML::Node n(YAML::NodeType::Sequence);
  n.SetStyle(YAML::EmitterStyle::Flow);
  for (Eigen::Index i = 0; i < v.size(); ++i) n.push_back(num(v(i)));
  return n;
}

YAML::Node state_node(const Eigen::VectorXd& s, int n) {
  YAML::Node out;
  out["position"] = vec_node(s.head(n));
  out["velocity"] = vec_node(s.tail(n));
  return out;
}

YAML::Node box_node(const BoxBounds& b) {
  YAML::Node out;
  out["lower"] = vec_node(b.lower);
  out["upper"] = vec_node(b.upper);
  return out;
}

YAML::Node to_node(const Scenario& sc) {
  YAML::Node r;
  r["name"] = sc.name;
  r["dimension"] = sc.n;
  r["dt"] = num(sc.dt);
  r["horizon"] = sc.horizon;
  r["delta"] = num(sc.delta);
  r["mode"] = to_string(sc.mode);
  r["weights"]["q"] = num(sc.q_scale);
  r["weights"]["r"] = num(sc.r_scale);
  r["weights"]["qf"] = num(sc.qf_scale);
  r["weights"]["kappa"] = num(sc.kappa);
  r["d_min"] = num(sc.d_min);
  r["soft_fallback"] = sc.soft_fallback;
  r["separation_filter"] = sc.separation_filter;
  r["max_steps"] = sc.max_steps;
  r["goal_tolerance"]["position"] = num(sc.goal_tol_pos);
  r["goal_tolerance"]["velocity"] = num(sc.goal_tol_vel);
  r["seed"] = sc.seed;
  if (sc.input_bounds) r["input_bounds"] = box_node(*sc.input_bounds);
  YAML::Node a;
  a["rho"] = num(sc.admm.rho);
  a["max_rounds"] = sc.admm.max_rounds;
  a["tolerance"] = num(sc.admm.tolerance);
  a["parallel"] = sc.admm.parallel;
  a["harmonize"] = sc.admm.harmonize;
  const auto& o = sc.admm.solver;
  a["solver"]["max_outer_iters"] = o.max_outer_iters;
  a["solver"]["max_inner_iters"] = o.max_inner_iters;
  a["solver"]["constraint_tolerance"] = num(o.constraint_tolerance);
  a["solver"]["stationarity_tolerance"] = num(o.stationarity_tolerance);
  a["solver"]["initial_penalty"] = num(o.initial_penalty);
  a["solver"]["penalty_growth"] = num(o.penalty_growth);
  a["solver"]["max_penalty"] = num(o.max_penalty);
  a["solver"]["fd_step"] = num(o.fd_step);
  r["admm"] = a;
  YAML::Node p;
  p["policy"] = to_string(sc.planner_policy);
  p["workspace"] = box_node(sc.planner.workspace);
  p["step"] = num(sc.planner.step);
  p["goal_bias"] = num(sc.planner.goal_bias);
  p["max_iters"] = sc.planner.max_iters;
  p["goal_tolerance"] = num(sc.planner.goal_tolerance);
  r["planner"] = p;
  for (const auto& ag : sc.agents) {
    YAML::Node an;
    an["start"] = state_node(ag.start, sc.n);
    an["goal"] = state_node(ag.goal, sc.n);
    r["agents"].push_back(an);
  }
  return r;
}

std::string dump(const YAML::Node& node) {
  YAML::Emitter out;
  out << node;
  return std::string(out.c_str()) + "\n";
}

YAML::Node summary_node(const RunReport& rep) {
  YAML::Node r;
  r["scenario"] = rep.scenario;
  r["success"] = rep.success;
  r["steps"] = rep.steps;
  r["cost"] = num(rep.cost);
  r["cost_with_slack"] = num(rep.cost_with_slack);
  r["min_dist"] = num(rep.min_dist);
  r["max_slack"] = num(rep.max_slack);
  r["infeasibility_events"] = rep.infeasibility_events;
  r["filter_activations"] = rep.filter_activations;
  r["mean_rounds"] = num(rep.mean_rounds);
  r["final_goal_error"] = num(rep.final_goal_error);
  r["error"] = rep.error;
  return r;
}

}  // namespace

Override parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ScenarioError("--set expects key=value, got '" + text + "'");
  }
  return {text.substr(0, eq), text.substr(eq + 1)};
}

Scenario parse_scenario(const std::string& text, const std::string& source,
                        const std::vector<Override>& overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ScenarioError(where(source, e.mark) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ScenarioError(source + ": top level must be a mapping");
  for (const auto& ov : overrides) apply(root, ov, source);
  try {
    return from_node(root, source);
  } catch (const YAML::Exception& e) {
    throw ScenarioError(where(source, e.mark) + ": " + e.msg);
  }
}

Scenario load_scenario(const std::string& path, const std::vector<Override>& overrides) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path + ": cannot open scenario file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path, overrides);
}

std::string emit_scenario(const Scenario& sc) { return dump(to_node(sc)); }

std::string trace_header(int n) {
  static const char* axes = "xyz";
  std::string h = "step,agent";
  for (int d = 0; d < n; ++d) h += std::string(",") + axes[d];
  for (int d = 0; d < n; ++d) h += std::string(",v") + axes[d];
  for (int d = 0; d < n; ++d) h += std::string(",a") + axes[d];
  return h + ",min_dist,admm_rounds,residual\n";
}

std::string trace_csv(const RunReport& rep, int n) {
  std::string out = trace_header(n);
  char buf[64];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof(buf), ",%.9e", x);
    out += buf;
  };
  for (const auto& log : rep.log) {
    for (std::size_t i = 0; i < log.states.size(); ++i) {
      out += std::to_string(log.step) + "," + std::to_string(i);
      for (int d = 0; d < 2 * n; ++d) put(log.states[i](d));
      for (int d = 0; d < n; ++d) put(log.inputs[i](d));
      put(log.min_dist);
      out += "," + std::to_string(log.admm_rounds);
      put(log.residual);
      out += "\n";
    }
  }
  return out;
}

std::string report_yaml(const Scenario& sc, const RunReport& rep) {
  YAML::Node r = summary_node(rep);
  for (const auto& log : rep.log) {
    YAML::Node s;
    s["step"] = log.step;
    s["admm_rounds"] = log.admm_rounds;
    s["admm_converged"] = log.admm_converged;
    s["residual"] = num(log.residual);
    s["min_dist"] = num(log.min_dist);
    s["soft_fallback"] = log.soft_fallback;
    s["filtered_pairs"] = log.filtered_pairs;
    s["max_slack"] = num(log.max_slack);
    s["applied_slack"] = num(log.applied_slack);
    YAML::Node st(YAML::NodeType::Sequence);
    st.SetStyle(YAML::EmitterStyle::Flow);
    for (auto status : log.statuses) st.push_back(to_string(status));
    s["statuses"] = st;
    r["log"].push_back(s);
  }
  r["config"] = to_node(sc);
  return dump(r);
}

std::string timing_yaml(const RunReport& rep) {
  YAML::Node r;
  r["total_time"] = num(rep.total_time);
  r["mean_time"] = num(rep.mean_time);
  YAML::Node per(YAML::NodeType::Sequence);
  per.SetStyle(YAML::EmitterStyle::Flow);
  for (const auto& log : rep.log) per.push_back(num(log.wall_time));
  r["step_times"] = per;
  return dump(r);
}

std::string sweep_yaml(const std::vector<SweepEntry>& entries) {
  YAML::Node r(YAML::NodeType::Sequence);
  for (const auto& e : entries) {
    YAML::Node s = summary_node(e.report);
    s["delta"] = num(e.delta);
    r.push_back(s);
  }
  return dump(r);
}

std::string compare_yaml(const ModeComparison& cmp) {
  YAML::Node r;
  r["hard"] = summary_node(cmp.hard);
  r["hard"]["mean_time"] = num(cmp.hard.mean_time);
  r["soft"] = summary_node(cmp.soft);
  r["soft"]["mean_time"] = num(cmp.soft.mean_time);
  return dump(r);
}

}  // namespace dmpc
