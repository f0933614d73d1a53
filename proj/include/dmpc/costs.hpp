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

#ifndef DMPC_COSTS_HPP
#define DMPC_COSTS_HPP

#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dmpc/copy_vector.hpp"
#include "dmpc/dynamics.hpp"

namespace dmpc {

template <typename Scalar>
struct BasicCostWeights {
  MatrixX<Scalar> Q;
  MatrixX<Scalar> R;
  MatrixX<Scalar> Qf;
  Scalar kappa = Scalar(100);
};

using CostWeights = BasicCostWeights<double>;

/// Target state; velocities are zero for a rest-to-rest transition.
template <typename Scalar>
struct BasicGoalSpec {
  VectorX<Scalar> s_g;
};

using GoalSpec = BasicGoalSpec<double>;

template <typename Scalar = double>
BasicCostWeights<Scalar> scaled_weights(int n, Scalar q_scale, Scalar r_scale, Scalar qf_scale,
                                        Scalar kappa) {
  BasicCostWeights<Scalar> w;
  w.Q = q_scale * MatrixX<Scalar>::Identity(2 * n, 2 * n);
  w.R = r_scale * MatrixX<Scalar>::Identity(n, n);
  w.Qf = qf_scale * MatrixX<Scalar>::Identity(2 * n, 2 * n);
  w.kappa = kappa;
  return w;
}

template <typename Scalar = double>
BasicGoalSpec<Scalar> rest_goal(const VectorX<Scalar>& position) {
  BasicGoalSpec<Scalar> goal;
  goal.s_g = VectorX<Scalar>::Zero(2 * position.size());
  goal.s_g.head(position.size()) = position;
  return goal;
}

namespace detail {
template <typename Scalar>
bool is_symmetric_psd(const MatrixX<Scalar>& M, Scalar floor) {
  if (M.rows() != M.cols()) return false;
  if (!M.isApprox(M.transpose(), Scalar(1e-12)) && (M - M.transpose()).norm() > Scalar(1e-12)) {
    return false;
  }
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(M);
  return eig.eigenvalues().minCoeff() >= floor;
}
}  // namespace detail

/// Throws unless Q, Q_f are symmetric PSD, R is symmetric PD and kappa >= 0.
template <typename Scalar>
void validate(const BasicCostWeights<Scalar>& w, int n) {
  if (w.Q.rows() != 2 * n || w.Qf.rows() != 2 * n || w.R.rows() != n) {
    throw std::invalid_argument("CostWeights: matrix sizes do not match dimension");
  }
  if (!detail::is_symmetric_psd(w.Q, Scalar(-1e-12))) {
    throw std::invalid_argument("CostWeights: Q must be symmetric positive semidefinite");
  }
  if (!detail::is_symmetric_psd(w.Qf, Scalar(-1e-12))) {
    throw std::invalid_argument("CostWeights: Q_f must be symmetric positive semidefinite");
  }
  if (!detail::is_symmetric_psd(w.R, Scalar(1e-12))) {
    throw std::invalid_argument("CostWeights: R must be symmetric positive definite");
  }
  if (!(w.kappa >= Scalar(0))) throw std::invalid_argument("CostWeights: kappa must be >= 0");
}

template <typename Scalar, typename SD, typename UD>
Scalar stage_cost(const Eigen::MatrixBase<SD>& s, const Eigen::MatrixBase<UD>& u,
                  const BasicGoalSpec<Scalar>& goal, const BasicCostWeights<Scalar>& w) {
  if (s.size() != goal.s_g.size() || s.size() != w.Q.rows() || u.size() != w.R.rows()) {
    throw std::invalid_argument("stage_cost: dimension mismatch");
  }
  const VectorX<Scalar> e = s - goal.s_g;
  return e.dot(w.Q * e) + u.dot(w.R * u);
}

template <typename Scalar, typename SD>
Scalar terminal_cost(const Eigen::MatrixBase<SD>& s, const BasicGoalSpec<Scalar>& goal,
                     const BasicCostWeights<Scalar>& w) {
  if (s.size() != goal.s_g.size() || s.size() != w.Qf.rows()) {
    throw std::invalid_argument("terminal_cost: dimension mismatch");
  }
  const VectorX<Scalar> e = s - goal.s_g;
  return e.dot(w.Qf * e);
}

/// Sum of stage costs, terminal cost, and kappa times the slacks (if any).
template <typename Scalar>
Scalar trajectory_cost(const BasicTrajectory<Scalar>& traj, const BasicGoalSpec<Scalar>& goal,
                       const BasicCostWeights<Scalar>& w, std::span<const Scalar> slacks = {}) {
  if (traj.states.size() != traj.inputs.size() + 1) {
    throw std::invalid_argument("trajectory_cost: need N+1 states for N inputs");
  }
  Scalar total(0);
  for (std::size_t k = 0; k < traj.inputs.size(); ++k) {
    total += stage_cost(traj.states[k], traj.inputs[k], goal, w);
  }
  total += terminal_cost(traj.states.back(), goal, w);
  for (Scalar a : slacks) {
    if (a < Scalar(0)) throw std::invalid_argument("trajectory_cost: negative slack");
    total += w.kappa * a;
  }
  return total;
}

template <typename Scalar>
Scalar global_cost(std::span<const BasicTrajectory<Scalar>> trajs,
                   std::span<const BasicGoalSpec<Scalar>> goals,
                   const BasicCostWeights<Scalar>& w) {
  if (trajs.size() != goals.size()) {
    throw std::invalid_argument("global_cost: one goal per trajectory required");
  }
  Scalar total(0);
  for (std::size_t m = 0; m < trajs.size(); ++m) total += trajectory_cost(trajs[m], goals[m], w);
  return total;
}

/// Consensus objective of agent `own`: cost of its own block plus
/// gamma^T (v - v_bar) + rho/2 ||v - v_bar||^2 over the whole copy vector.
inline double augmented_lagrangian(int own, const CopyVector& v, const CopyVector& v_bar,
                                   const CopyVector& gamma, double rho, const GoalSpec& goal,
                                   const CostWeights& w, std::span<const double> slacks = {}) {
  require_same_shape(v, v_bar, "augmented_lagrangian");
  require_same_shape(v, gamma, "augmented_lagrangian");
  if (rho < 0) throw std::invalid_argument("augmented_lagrangian: rho must be >= 0");
  if (own < 0 || own >= v.agents()) {
    throw std::invalid_argument("augmented_lagrangian: agent index out of range");
  }
  const Eigen::VectorXd diff = v.data() - v_bar.data();
  return trajectory_cost(v.trajectory(own), goal, w, slacks) + gamma.data().dot(diff) +
         0.5 * rho * diff.squaredNorm();
}

}  // namespace dmpc

#endif  // DMPC_COSTS_HPP
