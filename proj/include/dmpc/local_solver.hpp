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

// One agent's consensus subproblem: minimize the augmented Lagrangian of its
// copy vector subject to its own dynamics and dual-certificate collision
// constraints against its copies of every other agent.
//
// Own states are eliminated through the dynamics (condensing), so the own
// block is parameterized by its inputs alone. The remaining decision
// variables are, per (neighbor j, step k = 1..N), the copy position of j,
// the certificate lambda (2n entries) and, in soft mode, the slack alpha.
// Copy entries that enter no constraint take their proximal optimum
// v_bar - gamma / rho in closed form.

#ifndef DMPC_LOCAL_SOLVER_HPP
#define DMPC_LOCAL_SOLVER_HPP

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmpc/copy_vector.hpp"
#include "dmpc/costs.hpp"
#include "dmpc/dynamics.hpp"
#include "dmpc/geometry.hpp"

namespace dmpc {

enum class ConstraintMode { kHard, kSoft };
enum class SolveStatus { kConverged, kMaxIters, kInfeasible };

const char* to_string(ConstraintMode mode);
const char* to_string(SolveStatus status);

struct BoxBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// Certificates indexed by (agent j, step k) with k in 1..N; the own agent's
/// entries are unused.
class CertificateSet {
 public:
  CertificateSet() = default;
  CertificateSet(int agents, int horizon, int n);

  DualCertificate& at(int j, int k) { return items_[index(j, k)]; }
  const DualCertificate& at(int j, int k) const { return items_[index(j, k)]; }
  int agents() const { return agents_; }
  int horizon() const { return horizon_; }
  bool empty() const { return items_.empty(); }

 private:
  int index(int j, int k) const;
  int agents_ = 0;
  int horizon_ = 0;
  std::vector<DualCertificate> items_;
};

struct LocalProblem {
  int agent_id = 0;
  DiscreteModel<double> model;
  int horizon = 10;
  Eigen::VectorXd s0;
  GoalSpec goal;
  CostWeights weights;
  double delta = 0.1;
  ConstraintMode mode = ConstraintMode::kHard;
  int agents = 1;
  // Consensus inputs; both shaped like the copy vector.
  CopyVector v_bar;
  CopyVector gamma;
  double rho = 1.0;
  DistanceThresholds thresholds;
  std::optional<BoxBounds> workspace;
  std::optional<BoxBounds> input_bounds;

  StackLayout layout() const { return {agents, horizon, model.n}; }
};

/// Fills v_bar and gamma with zeros of the right shape.
LocalProblem make_local_problem(int agent_id, int agents, const DiscreteModel<double>& model,
                                int horizon, Eigen::VectorXd s0, GoalSpec goal,
                                CostWeights weights, double delta, ConstraintMode mode,
                                double rho);

void validate(const LocalProblem& p);

struct SolverOptions {
  int max_outer_iters = 40;
  int max_inner_iters = 60;
  double constraint_tolerance = 1e-6;
  double stationarity_tolerance = 1e-6;
  double initial_penalty = 10.0;
  double penalty_growth = 10.0;
  double max_penalty = 1e9;
  double fd_step = 1e-6;
};

void validate(const SolverOptions& opts);

struct LocalWarmStart {
  std::optional<CopyVector> v;
  std::optional<CertificateSet> certificates;
  /// Constraint multipliers of a previous solve of the same-shaped problem.
  std::optional<Eigen::VectorXd> multipliers;
};

struct LocalSolution {
  CopyVector v_plus;
  CertificateSet certificates;
  SolveStatus status = SolveStatus::kMaxIters;
  double feasibility = 0.0;
  double stationarity = 0.0;
  double objective = 0.0;
  double max_slack = 0.0;
  int outer_iterations = 0;
  int inner_iterations = 0;
  /// Constraint multipliers, ordered like LocalNlp::constraints.
  Eigen::VectorXd multipliers;
};

/// Penalty state of the augmented-Lagrangian constraint treatment.
struct PenaltyState {
  Eigen::VectorXd multipliers;
  double penalty = 10.0;
};

/// The local problem as a smooth bound-constrained program over
/// z = [own inputs; per (j, k): copy position, lambda, alpha (soft only)].
/// Each (j, k) block contributes two constraint rows, the certificate
/// inequality and the unit-norm equality 1 - ||lambda+ - lambda-||^2 = 0;
/// linear input and workspace rows (>= 0) follow.
class LocalNlp {
 public:
  explicit LocalNlp(const LocalProblem& p);

  int num_variables() const { return num_vars_; }
  int num_constraints() const { return num_cons_; }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  int block_size() const { return block_size_; }
  const LocalProblem& problem() const { return p_; }

  Eigen::VectorXd pack(const CopyVector& v, const CertificateSet& certs) const;
  /// Expands z to a full copy vector (closed-form blocks included) and certificates.
  void unpack(const Eigen::VectorXd& z, CopyVector& v, CertificateSet& certs) const;

  /// Default starting point: zero inputs (or warm start), proximal copies and
  /// face-aligned certificates.
  Eigen::VectorXd initial_point(const LocalWarmStart& warm) const;

  /// Full augmented-Lagrangian objective, including slack penalty and the
  /// constant contribution of closed-form blocks.
  double objective(const Eigen::VectorXd& z) const;
  Eigen::VectorXd objective_gradient(const Eigen::VectorXd& z) const;

  Eigen::VectorXd constraints(const Eigen::VectorXd& z) const;
  /// Row `row` of constraints() is an equality (c = 0) rather than c >= 0.
  bool is_equality(int row) const;
  /// Largest violation of constraints() values `c`.
  double violation(const Eigen::VectorXd& c) const;
  /// First-order multiplier update for the augmented Lagrangian.
  Eigen::VectorXd updated_multipliers(const Eigen::VectorXd& nu, const Eigen::VectorXd& c,
                                      double mu) const;
  /// Rows are constraint gradients.
  Eigen::MatrixXd constraint_jacobian(const Eigen::VectorXd& z) const;

  double merit(const Eigen::VectorXd& z, const PenaltyState& ps) const;
  Eigen::VectorXd merit_gradient(const Eigen::VectorXd& z, const PenaltyState& ps) const;
  /// Dense Gauss-Newton merit Hessian (bilinear certificate curvature
  /// omitted), used for testing the block-structured Newton system.
  Eigen::MatrixXd merit_hessian(const Eigen::VectorXd& z, const PenaltyState& ps) const;

  /// Replaces certificates with ||G^T lambda|| < 1/2 by the face-aligned one;
  /// returns how many were replaced.
  int reset_degenerate_certificates(Eigen::VectorXd& z) const;

  /// Projection onto lambda >= 0, alpha >= 0.
  void project(Eigen::VectorXd& z) const;
  bool is_bounded(int index) const { return bounded_[index]; }
  /// ||z - P(z - grad)||_inf.
  double projected_gradient_norm(const Eigen::VectorXd& z, const Eigen::VectorXd& grad) const;

  /// Own positions at steps 1..N, as a function of own inputs.
  Eigen::VectorXd own_position(const Eigen::VectorXd& z, int k) const;

  /// Solves the regularized projected-Newton system and returns the step.
  Eigen::VectorXd newton_direction(const Eigen::VectorXd& z, const PenaltyState& ps,
                                   const Eigen::VectorXd& grad, double active_eps,
                                   double regularization) const;

  struct Block {
    int neighbor = 0;
    int step = 0;
    int offset = 0;
  };
  const std::vector<Block>& blocks() const { return blocks_; }
  int input_size() const { return nu_; }

 private:
  struct Accumulated;
  void accumulate(const Eigen::VectorXd& z, const PenaltyState* ps, bool want_hessian,
                  Accumulated& acc) const;

  LocalProblem p_;
  StackLayout layout_;
  int n_ = 0;
  int N_ = 0;
  int nu_ = 0;
  int block_size_ = 0;
  int num_vars_ = 0;
  int num_cons_ = 0;
  int cons_per_block_ = 0;
  bool soft_ = false;
  double d_min_ = 0.0;
  std::vector<Block> blocks_;
  std::vector<bool> bounded_;
  // Condensed own trajectory: states = x_free + Su u.
  Eigen::VectorXd x_free_;
  Eigen::MatrixXd Su_;
  // Own-block objective 1/2 u^T H u + f^T u + c.
  Eigen::MatrixXd own_H_;
  Eigen::VectorXd own_f_;
  double own_c_ = 0.0;
  double closed_form_c_ = 0.0;
  // Linear constraints a^T u + b >= 0 from workspace and input bounds.
  Eigen::MatrixXd lin_A_;
  Eigen::VectorXd lin_b_;
};

LocalSolution solve_local(const LocalProblem& p, const LocalWarmStart& warm,
                          const SolverOptions& opts);

struct KktResidual {
  double feasibility = 0.0;
  double stationarity = 0.0;
};

/// Re-checks a candidate: feasibility covers own dynamics, certificate
/// constraints, norm conditions and sign bounds; stationarity is the projected
/// Lagrangian gradient using the candidate's multipliers (zero if absent).
KktResidual kkt_residual(const LocalProblem& p, const LocalSolution& candidate);

/// Gradient of the augmented-Lagrangian merit at a packed point. Without a
/// penalty state this is the plain objective gradient.
Eigen::VectorXd objective_gradient(const LocalProblem& p, const Eigen::VectorXd& point,
                                   const PenaltyState* penalty = nullptr);

/// Warm-start certificates from the face-alignment rule for the positions in v.
CertificateSet initial_certificates(const LocalProblem& p, const CopyVector& v);

}  // namespace dmpc

#endif  // DMPC_LOCAL_SOLVER_HPP
