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


// Reference computations the tests compare against. None of them calls into
// the library's solvers.

#ifndef DMPC_TESTS_ORACLES_HPP
#define DMPC_TESTS_ORACLES_HPP

#include <algorithm>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace dmpc::testing {

struct LqrSolution {
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> inputs;
};

/// Finite-horizon LQR tracking of a fixed point s_g of A (A s_g = s_g):
/// minimize sum_k e_k'Q e_k + u_k'R u_k + e_N'Qf e_N with e = s - s_g,
/// solved by the backward Riccati recursion.
inline LqrSolution riccati_tracking(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                    const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                                    const Eigen::MatrixXd& Qf, int N, const Eigen::VectorXd& s0,
                                    const Eigen::VectorXd& s_g) {
  std::vector<Eigen::MatrixXd> K(N);
  Eigen::MatrixXd P = Qf;
  for (int k = N - 1; k >= 0; --k) {
    const Eigen::MatrixXd S = R + B.transpose() * P * B;
    K[k] = S.ldlt().solve(B.transpose() * P * A);
    P = Q + A.transpose() * P * (A - B * K[k]);
  }
  LqrSolution out;
  Eigen::VectorXd e = s0 - s_g;
  out.states.push_back(s0);
  for (int k = 0; k < N; ++k) {
    const Eigen::VectorXd u = -K[k] * e;
    e = A * e + B * u;
    out.inputs.push_back(u);
    out.states.push_back(e + s_g);
  }
  return out;
}

/// Signed distance from x to the box |y - c|_inf <= h by per-axis clamping.
inline double box_sdf_clamp(const Eigen::VectorXd& c, double h, const Eigen::VectorXd& x) {
  const Eigen::ArrayXd q = (x - c).cwiseAbs().array() - h;
  const double outside = q.max(0.0).matrix().norm();
  const double inside = std::min(q.maxCoeff(), 0.0);
  return outside + inside;
}

/// Central differences of a scalar function.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& z, double h) {
  Eigen::VectorXd g(z.size());
  Eigen::VectorXd zp = z, zm = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    zp(i) = z(i) + h;
    zm(i) = z(i) - h;
    g(i) = (f(zp) - f(zm)) / (2 * h);
    zp(i) = zm(i) = z(i);
  }
  return g;
}

/// Central differences of a vector function; rows are outputs.
inline Eigen::MatrixXd central_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& z,
    double h) {
  const Eigen::VectorXd f0 = f(z);
  Eigen::MatrixXd J(f0.size(), z.size());
  Eigen::VectorXd zp = z, zm = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    zp(i) = z(i) + h;
    zm(i) = z(i) - h;
    J.col(i) = (f(zp) - f(zm)) / (2 * h);
    zp(i) = zm(i) = z(i);
  }
  return J;
}

/// max |a - b| / max(1, max |b|).
inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace dmpc::testing

#endif  // DMPC_TESTS_ORACLES_HPP
