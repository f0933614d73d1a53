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

#include <algorithm>

#include <gtest/gtest.h>

#include "dmpc/consensus.hpp"
#include "oracles.hpp"

namespace dmpc {
namespace {

const auto kModel = make_discrete_double_integrator(2, 0.1);
const auto kWeights = scaled_weights(2, 0.1, 1.0, 1.0, 100.0);

LocalProblem problem(int id, int M, const Eigen::Vector4d& s0, const Eigen::Vector4d& goal) {
  return make_local_problem(id, M, kModel, 6, s0, GoalSpec{goal}, kWeights, 0.1,
                            ConstraintMode::kHard, 1.0);
}

TEST(Consensus, AverageAndResidual) {
  const StackLayout layout{2, 1, 2};
  std::vector<CopyVector> copies(3, CopyVector(layout));
  copies[0].data().setConstant(1.0);
  copies[1].data().setConstant(2.0);
  copies[2].data().setConstant(6.0);
  const NetworkAverage avg = average(copies);
  EXPECT_TRUE(avg.data().isApproxToConstant(3.0));
  const ConsensusResidual r = consensus_residual(copies, avg);
  const double root = std::sqrt(static_cast<double>(layout.size()));
  EXPECT_NEAR(r.per_agent[0], 2.0 * root, 1e-12);
  EXPECT_NEAR(r.primal, 3.0 * root, 1e-12);
}

TEST(Consensus, DualUpdate) {
  const StackLayout layout{1, 1, 2};
  CopyVector gamma(layout), v(layout), vbar(layout);
  gamma.data().setConstant(0.5);
  v.data().setConstant(2.0);
  vbar.data().setConstant(1.0);
  EXPECT_TRUE(dual_update(gamma, v, vbar, 3.0).data().isApproxToConstant(3.5));
  CopyVector other(StackLayout{2, 1, 2});
  EXPECT_THROW(dual_update(gamma, other, vbar, 1.0), std::invalid_argument);
}

TEST(Consensus, SingleAgentStopsAfterOneRound) {
  const auto res = run_admm({problem(0, 1, Eigen::Vector4d(0, 0, 0, 0), Eigen::Vector4d(1, 0, 0, 0))},
                            {LocalWarmStart{}}, AdmmConfig{});
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.rounds, 1);
  EXPECT_EQ(res.history[0].primal, 0.0);
}

TEST(Consensus, DecoupledAgentsMatchIndependentSolves) {
  const Eigen::Vector4d a0(-10, 0, 0, 0), ag(-9, 1, 0, 0), b0(10, 0, 0.5, 0), bg(9, -1, 0, 0);
  AdmmConfig cfg;
  cfg.max_rounds = 2000;
  cfg.tolerance = 1e-7;
  const auto res = run_admm({problem(0, 2, a0, ag), problem(1, 2, b0, bg)},
                            {LocalWarmStart{}, LocalWarmStart{}}, cfg);
  EXPECT_TRUE(res.converged);
  int j = 0;
  for (const auto& [s, g] : {std::pair{a0, ag}, std::pair{b0, bg}}) {
    const auto ref = testing::riccati_tracking(kModel.Ak, kModel.Bk, kWeights.Q, kWeights.R,
                                               kWeights.Qf, 6, s, g);
    for (int k = 0; k < 6; ++k) {
      EXPECT_NEAR((res.consensus.input(j, k) - ref.inputs[k]).norm(), 0.0, 1e-4);
    }
    ++j;
  }
}

TEST(Consensus, CrossingAgentsAgreeAndSeparate) {
  // Closing speed chosen so the separation constraint ends up active; with an
  // active contact cold-started ADMM needs a few hundred rounds.
  const Eigen::Vector4d a0(-0.4, 0.05, 0.6, 0), ag(1, 0, 0, 0), b0(0.4, 0, -0.6, 0),
      bg(-1, 0, 0, 0);
  AdmmConfig cfg;
  cfg.max_rounds = 500;
  const auto res = run_admm({problem(0, 2, a0, ag), problem(1, 2, b0, bg)},
                            {LocalWarmStart{}, LocalWarmStart{}}, cfg);
  EXPECT_TRUE(res.converged) << "primal residual " << res.history.back().primal;
  double closest = 1e9;
  for (int k = 2; k <= 6; ++k) {
    const Eigen::VectorXd r = res.consensus.position(0, k) - res.consensus.position(1, k);
    closest = std::min(closest, r.cwiseAbs().maxCoeff());
    EXPECT_GE(r.cwiseAbs().maxCoeff(), 0.1 - 1e-2);
  }
  EXPECT_LT(closest, 0.12);  // the agents really do meet
}

TEST(Consensus, ParallelMatchesSequential) {
  const Eigen::Vector4d a0(-0.3, 0.05, 0.5, 0), ag(1, 0, 0, 0), b0(0.3, 0, -0.5, 0),
      bg(-1, 0, 0, 0);
  AdmmConfig seq, par;
  par.parallel = true;
  const std::vector<LocalProblem> ps{problem(0, 2, a0, ag), problem(1, 2, b0, bg)};
  const auto a = run_admm(ps, {LocalWarmStart{}, LocalWarmStart{}}, seq);
  const auto b = run_admm(ps, {LocalWarmStart{}, LocalWarmStart{}}, par);
  EXPECT_EQ(a.rounds, b.rounds);
  EXPECT_EQ(a.consensus.data(), b.consensus.data());
}

TEST(Consensus, HarmonizedCertificatesAreOpposite) {
  std::vector<LocalSolution> sols(2);
  for (auto& s : sols) s.certificates = CertificateSet(2, 2, 2);
  sols[0].certificates.at(1, 1).lambda = Eigen::Vector4d(1, 0, 0, 0);
  sols[1].certificates.at(0, 1).lambda = Eigen::Vector4d(0, 0, 0, 1);
  sols[0].certificates.at(1, 2).lambda = Eigen::Vector4d(1, 0, 0, 0);
  sols[1].certificates.at(0, 2).lambda = Eigen::Vector4d(0, 0, 1, 0);
  harmonize_certificates(sols);
  const auto& a = sols[0].certificates.at(1, 1).lambda;
  const auto& b = sols[1].certificates.at(0, 1).lambda;
  EXPECT_NEAR(cube_gt_lambda(a).norm(), 1.0, 1e-12);
  EXPECT_TRUE((cube_gt_lambda(a) + cube_gt_lambda(b)).isZero(1e-12));
  EXPECT_NEAR(cube_gt_lambda(a)(0), std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(cube_gt_lambda(a)(1), std::sqrt(0.5), 1e-12);
  // Already consistent faces stay put.
  EXPECT_TRUE(sols[0].certificates.at(1, 2).lambda.isApprox(Eigen::Vector4d(1, 0, 0, 0)));
}

TEST(Consensus, RejectsBadInput) {
  AdmmConfig cfg;
  cfg.rho = 0;
  EXPECT_THROW(validate(cfg), std::invalid_argument);
  EXPECT_THROW(run_admm({}, {}, AdmmConfig{}), std::invalid_argument);
  const auto p = problem(0, 2, Eigen::Vector4d::Zero(), Eigen::Vector4d::Zero());
  EXPECT_THROW(run_admm({p}, {LocalWarmStart{}}, AdmmConfig{}), std::invalid_argument);
}

}  // namespace
}  // namespace dmpc
