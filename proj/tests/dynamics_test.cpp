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


#include <gtest/gtest.h>

#include "dmpc/dynamics.hpp"

namespace dmpc {
namespace {

TEST(Dynamics, EulerMatrices) {
  const auto m = make_discrete_double_integrator(2, 0.1);
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(4, 4);
  A(0, 2) = A(1, 3) = 0.1;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(4, 2);
  B(2, 0) = B(3, 1) = 0.1;
  EXPECT_TRUE(m.Ak.isApprox(A));
  EXPECT_TRUE(m.Bk.isApprox(B));
  EXPECT_EQ(m.state_dim(), 4);
  EXPECT_EQ(m.input_dim(), 2);
}

TEST(Dynamics, ThreeDimensionalShapes) {
  const auto m = make_discrete_double_integrator(3, 0.05);
  EXPECT_EQ(m.Ak.rows(), 6);
  EXPECT_EQ(m.Bk.cols(), 3);
  EXPECT_DOUBLE_EQ(m.Ak(2, 5), 0.05);
}

TEST(Dynamics, RejectsBadArguments) {
  EXPECT_THROW(make_double_integrator(4), std::invalid_argument);
  EXPECT_THROW(make_discrete_double_integrator(2, 0.0), std::invalid_argument);
  const auto m = make_discrete_double_integrator(2, 0.1);
  EXPECT_THROW(step(m, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2)),
               std::invalid_argument);
  EXPECT_THROW(step(m, Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(3)),
               std::invalid_argument);
}

// Constant acceleration from rest: v_k = k dt u, p_k = dt^2 u k (k - 1) / 2.
TEST(Dynamics, ConstantInputClosedForm) {
  const double dt = 0.1;
  const auto m = make_discrete_double_integrator(2, dt);
  const Eigen::Vector2d u(1.0, -2.0);
  std::vector<Eigen::VectorXd> inputs(7, u);
  const auto traj = rollout(m, Eigen::VectorXd(Eigen::VectorXd::Zero(4)), inputs);
  for (int k = 0; k <= 7; ++k) {
    const Eigen::Vector2d p = dt * dt * u * k * (k - 1) / 2.0;
    EXPECT_NEAR((traj.states[k].head(2) - p).norm(), 0.0, 1e-14);
    EXPECT_NEAR((traj.states[k].tail(2) - k * dt * u).norm(), 0.0, 1e-14);
  }
  EXPECT_EQ(dynamics_defect(m, traj), 0.0);
}

TEST(Dynamics, DefectSeesPerturbation) {
  const auto m = make_discrete_double_integrator(2, 0.1);
  std::vector<Eigen::VectorXd> inputs(3, Eigen::Vector2d(0.5, 0.5));
  auto traj = rollout(m, Eigen::VectorXd(Eigen::VectorXd::Ones(4)), inputs);
  traj.states[2](1) += 1e-3;
  EXPECT_NEAR(dynamics_defect(m, traj), 1e-3, 1e-12);
  traj.states.pop_back();
  EXPECT_THROW(dynamics_defect(m, traj), std::invalid_argument);
}

TEST(Dynamics, FloatInstantiation) {
  const auto m = make_discrete_double_integrator<float>(2, 0.1f);
  const Eigen::VectorXf s = Eigen::VectorXf::Ones(4);
  const Eigen::VectorXf next = step(m, s, Eigen::VectorXf::Zero(2));
  EXPECT_FLOAT_EQ(next(0), 1.1f);
}

}  // namespace
}  // namespace dmpc
