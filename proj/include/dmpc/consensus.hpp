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

#ifndef DMPC_CONSENSUS_HPP
#define DMPC_CONSENSUS_HPP

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "dmpc/copy_vector.hpp"
#include "dmpc/local_solver.hpp"

namespace dmpc {

struct AdmmConfig {
  double rho = 1.0;
  int max_rounds = 20;
  double tolerance = 1e-3;
  SolverOptions solver;
  /// Run the local solves of one round on separate threads.
  bool parallel = false;
  /// Give paired agents one shared separating face after every round.
  bool harmonize = true;
};

void validate(const AdmmConfig& cfg);

/// Block-wise mean of the copies, summed in ascending agent order.
NetworkAverage average(std::span<const CopyVector> copies);

Multiplier dual_update(const Multiplier& gamma, const CopyVector& v_plus,
                       const NetworkAverage& v_bar_plus, double rho);

struct ConsensusResidual {
  double primal = 0.0;
  std::vector<double> per_agent;
};

ConsensusResidual consensus_residual(std::span<const CopyVector> copies,
                                     const NetworkAverage& v_bar);

struct RoundRecord {
  int round = 0;
  std::vector<double> per_agent;
  double primal = 0.0;
  /// rho ||v_bar+ - v_bar||, the change of the network average in this round.
  double dual = 0.0;
  std::vector<double> objectives;
  std::vector<SolveStatus> statuses;
};

struct InfeasibleSolve {
  int agent = 0;
  int round = 0;
};

using LocalSolveFn =
    std::function<LocalSolution(const LocalProblem&, const LocalWarmStart&, const SolverOptions&)>;

struct AdmmResult {
  NetworkAverage consensus;
  std::vector<LocalSolution> solutions;
  /// Multipliers after the last round, one per agent.
  std::vector<Multiplier> gamma;
  int rounds = 0;
  bool converged = false;
  std::vector<RoundRecord> history;
  /// First local solve that reported INFEASIBLE, if any.
  std::optional<InfeasibleSolve> infeasible;
};

/// For every pair and step, replaces both agents' certificates by the
/// normalized difference of their face vectors, so that agent j holds the
/// negation of agent i's face. Slack values are left alone.
void harmonize_certificates(std::vector<LocalSolution>& sols);

/// Consensus ADMM, stopped when both the primal residual and the change of
/// the network average fall below the tolerance. Each problem carries its
/// agent's starting v_bar and gamma; rho comes from cfg and overrides the
/// problems' values.
AdmmResult run_admm(std::vector<LocalProblem> problems, std::vector<LocalWarmStart> warm,
                    const AdmmConfig& cfg, const LocalSolveFn& local_solve = solve_local);

}  // namespace dmpc

#endif  // DMPC_CONSENSUS_HPP
