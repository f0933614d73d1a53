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

#include "dmpc/consensus.hpp"

#include <algorithm>
#include <future>
#include <stdexcept>

namespace dmpc {

void validate(const AdmmConfig& cfg) {
  if (!(cfg.rho > 0)) throw std::invalid_argument("AdmmConfig: rho must be > 0");
  if (!(cfg.tolerance > 0)) throw std::invalid_argument("AdmmConfig: tolerance must be > 0");
  if (cfg.max_rounds < 1) throw std::invalid_argument("AdmmConfig: max_rounds must be >= 1");
  validate(cfg.solver);
}

NetworkAverage average(std::span<const CopyVector> copies) {
  if (copies.empty()) throw std::invalid_argument("average: no copies");
  NetworkAverage out(copies.front().layout());
  for (const auto& c : copies) {
    require_same_shape(out, c, "average");
    out.data() += c.data();
  }
  out.data() /= static_cast<double>(copies.size());
  return out;
}

Multiplier dual_update(const Multiplier& gamma, const CopyVector& v_plus,
                       const NetworkAverage& v_bar_plus, double rho) {
  require_same_shape(gamma, v_plus, "dual_update");
  require_same_shape(gamma, v_bar_plus, "dual_update");
  Multiplier out = gamma;
  out.data() += rho * (v_plus.data() - v_bar_plus.data());
  return out;
}

ConsensusResidual consensus_residual(std::span<const CopyVector> copies,
                                     const NetworkAverage& v_bar) {
  ConsensusResidual out;
  for (const auto& c : copies) {
    require_same_shape(c, v_bar, "consensus_residual");
    const double r = (c.data() - v_bar.data()).norm();
    out.per_agent.push_back(r);
    out.primal = std::max(out.primal, r);
  }
  return out;
}

void harmonize_certificates(std::vector<LocalSolution>& sols) {
  const int M = static_cast<int>(sols.size());
  if (M < 2) return;
  const int N = sols.front().certificates.horizon();
  for (int i = 0; i < M; ++i) {
    for (int j = i + 1; j < M; ++j) {
      for (int k = 1; k <= N; ++k) {
        DualCertificate& a = sols[i].certificates.at(j, k);
        DualCertificate& b = sols[j].certificates.at(i, k);
        const int n = static_cast<int>(a.lambda.size()) / 2;
        Eigen::VectorXd w = (a.lambda.head(n) - a.lambda.tail(n)) - (b.lambda.head(n) - b.lambda.tail(n));
        const double norm = w.norm();
        if (norm < 1e-9) continue;
        w /= norm;
        a.lambda.head(n) = w.cwiseMax(0.0);
        a.lambda.tail(n) = (-w).cwiseMax(0.0);
        b.lambda.head(n) = a.lambda.tail(n);
        b.lambda.tail(n) = a.lambda.head(n);
      }
    }
  }
}

AdmmResult run_admm(std::vector<LocalProblem> problems, std::vector<LocalWarmStart> warm,
                    const AdmmConfig& cfg, const LocalSolveFn& local_solve) {
  validate(cfg);
  const int M = static_cast<int>(problems.size());
  if (M < 1) throw std::invalid_argument("run_admm: no agents");
  if (static_cast<int>(warm.size()) != M) {
    throw std::invalid_argument("run_admm: one warm start per agent required");
  }
  const StackLayout layout = problems.front().layout();
  for (int i = 0; i < M; ++i) {
    auto& p = problems[i];
    if (p.agent_id != i || p.agents != M || p.layout() != layout ||
        p.model.dt != problems.front().model.dt) {
      throw std::invalid_argument("run_admm: problems must share M, N, n, dt and be in agent order");
    }
    p.rho = cfg.rho;
  }

  AdmmResult res;
  res.solutions.resize(M);
  std::vector<CopyVector> copies(M);

  for (int round = 1; round <= cfg.max_rounds; ++round) {
    if (cfg.parallel && M > 1) {
      std::vector<std::future<LocalSolution>> jobs;
      jobs.reserve(M);
      for (int i = 0; i < M; ++i) {
        jobs.push_back(std::async(std::launch::async, [&, i] {
          return local_solve(problems[i], warm[i], cfg.solver);
        }));
      }
      for (int i = 0; i < M; ++i) res.solutions[i] = jobs[i].get();
    } else {
      for (int i = 0; i < M; ++i) res.solutions[i] = local_solve(problems[i], warm[i], cfg.solver);
    }

    RoundRecord rec;
    rec.round = round;
    for (int i = 0; i < M; ++i) {
      const LocalSolution& s = res.solutions[i];
      if (s.v_plus.layout() != layout) {
        throw std::runtime_error("run_admm: local solve returned a mis-shaped copy vector");
      }
      copies[i] = s.v_plus;
      rec.objectives.push_back(s.objective);
      rec.statuses.push_back(s.status);
      if (s.status == SolveStatus::kInfeasible && !res.infeasible) {
        res.infeasible = InfeasibleSolve{i, round};
      }
    }

    const NetworkAverage v_bar = average(copies);
    const ConsensusResidual r = consensus_residual(copies, v_bar);
    rec.per_agent = r.per_agent;
    rec.primal = r.primal;
    for (const auto& p : problems) {
      rec.dual = std::max(rec.dual, cfg.rho * (v_bar.data() - p.v_bar.data()).norm());
    }
    res.history.push_back(rec);
    res.rounds = round;
    res.consensus = v_bar;

    if (cfg.harmonize && M > 1) harmonize_certificates(res.solutions);
    for (int i = 0; i < M; ++i) {
      problems[i].gamma = dual_update(problems[i].gamma, copies[i], v_bar, cfg.rho);
      problems[i].v_bar = v_bar;
      warm[i].v = copies[i];
      warm[i].certificates = res.solutions[i].certificates;
      warm[i].multipliers = res.solutions[i].multipliers;
    }
    // A single agent has nothing to agree on; otherwise the average must also
    // have stopped moving, or a proximal fixed point ends the loop early.
    if (r.primal <= cfg.tolerance && (M == 1 || rec.dual <= cfg.tolerance)) {
      res.converged = true;
      break;
    }
  }

  for (const auto& p : problems) res.gamma.push_back(p.gamma);
  return res;
}

}  // namespace dmpc
