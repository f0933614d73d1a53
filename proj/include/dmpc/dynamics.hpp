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

#ifndef DMPC_DYNAMICS_HPP
#define DMPC_DYNAMICS_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dmpc {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Double integrator s' = A s + B u in n spatial dimensions.
/// The state is [positions; velocities], the input is the acceleration.
template <typename Scalar>
struct ContinuousModel {
  int n = 0;
  MatrixX<Scalar> A;
  MatrixX<Scalar> B;
};

/// Forward-Euler discretization: A_k = A dt + I, B_k = B dt.
template <typename Scalar>
struct DiscreteModel {
  int n = 0;
  MatrixX<Scalar> Ak;
  MatrixX<Scalar> Bk;
  Scalar dt = Scalar(0);

  int state_dim() const { return 2 * n; }
  int input_dim() const { return n; }
};

/// N+1 states and N inputs.
template <typename Scalar>
struct BasicTrajectory {
  std::vector<VectorX<Scalar>> states;
  std::vector<VectorX<Scalar>> inputs;

  int horizon() const { return static_cast<int>(inputs.size()); }
};

using Trajectory = BasicTrajectory<double>;

template <typename Scalar = double>
ContinuousModel<Scalar> make_double_integrator(int n) {
  if (n != 2 && n != 3) {
    throw std::invalid_argument("make_double_integrator: dimension must be 2 or 3, got " +
                                std::to_string(n));
  }
  ContinuousModel<Scalar> model;
  model.n = n;
  model.A = MatrixX<Scalar>::Zero(2 * n, 2 * n);
  model.A.topRightCorner(n, n).setIdentity();
  model.B = MatrixX<Scalar>::Zero(2 * n, n);
  model.B.bottomRows(n).setIdentity();
  return model;
}

template <typename Scalar>
DiscreteModel<Scalar> discretize(const ContinuousModel<Scalar>& model, Scalar dt) {
  if (!(dt > Scalar(0))) {
    throw std::invalid_argument("discretize: dt must be positive");
  }
  DiscreteModel<Scalar> d;
  d.n = model.n;
  d.dt = dt;
  d.Ak = model.A * dt + MatrixX<Scalar>::Identity(2 * model.n, 2 * model.n);
  d.Bk = model.B * dt;
  return d;
}

template <typename Scalar = double>
DiscreteModel<Scalar> make_discrete_double_integrator(int n, Scalar dt) {
  return discretize(make_double_integrator<Scalar>(n), dt);
}

template <typename Scalar, typename StateDerived, typename InputDerived>
VectorX<Scalar> step(const DiscreteModel<Scalar>& model,
                     const Eigen::MatrixBase<StateDerived>& s,
                     const Eigen::MatrixBase<InputDerived>& u) {
  if (s.size() != model.state_dim() || u.size() != model.input_dim()) {
    throw std::invalid_argument("step: dimension mismatch (state " + std::to_string(s.size()) +
                                ", input " + std::to_string(u.size()) + ", n " +
                                std::to_string(model.n) + ")");
  }
  return model.Ak * s + model.Bk * u;
}

template <typename Scalar>
BasicTrajectory<Scalar> rollout(const DiscreteModel<Scalar>& model, const VectorX<Scalar>& s0,
                                const std::vector<VectorX<Scalar>>& inputs) {
  if (s0.size() != model.state_dim()) {
    throw std::invalid_argument("rollout: initial state has wrong dimension");
  }
  BasicTrajectory<Scalar> traj;
  traj.inputs = inputs;
  traj.states.reserve(inputs.size() + 1);
  traj.states.push_back(s0);
  for (const auto& u : inputs) {
    traj.states.push_back(step(model, traj.states.back(), u));
  }
  return traj;
}

/// Largest one-step defect max_k |s(k+1) - A_k s(k) - B_k u(k)|_inf.
template <typename Scalar>
Scalar dynamics_defect(const DiscreteModel<Scalar>& model, const BasicTrajectory<Scalar>& traj) {
  if (traj.states.size() != traj.inputs.size() + 1) {
    throw std::invalid_argument("dynamics_defect: need N+1 states for N inputs");
  }
  Scalar worst(0);
  for (std::size_t k = 0; k < traj.inputs.size(); ++k) {
    const VectorX<Scalar> pred = step(model, traj.states[k], traj.inputs[k]);
    worst = std::max(worst, (traj.states[k + 1] - pred).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace dmpc

#endif  // DMPC_DYNAMICS_HPP
