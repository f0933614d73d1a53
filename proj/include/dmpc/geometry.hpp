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

// Polytope obstacles {s : G s <= g}, distance / penetration oracles, and the
// dual certificates that turn "point outside polytope" into smooth constraints.

#ifndef DMPC_GEOMETRY_HPP
#define DMPC_GEOMETRY_HPP

#include <bit>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "dmpc/dynamics.hpp"

namespace dmpc {

inline constexpr double kContainSlack = 1e-12;

template <typename Scalar>
class BasicPolytope {
 public:
  BasicPolytope() = default;

  BasicPolytope(MatrixX<Scalar> G, VectorX<Scalar> g, bool check_nonempty = true)
      : G_(std::move(G)), g_(std::move(g)) {
    if (G_.rows() != g_.size() || G_.rows() == 0) {
      throw std::invalid_argument("Polytope: G has " + std::to_string(G_.rows()) +
                                  " rows but g has " + std::to_string(g_.size()) + " entries");
    }
    for (Eigen::Index r = 0; r < G_.rows(); ++r) {
      if (G_.row(r).squaredNorm() == Scalar(0)) {
        throw std::invalid_argument("Polytope: row " + std::to_string(r) + " of G is zero");
      }
    }
    if (check_nonempty && !project(VectorX<Scalar>::Zero(G_.cols()))) {
      throw std::invalid_argument("Polytope: the set {s : G s <= g} is empty");
    }
  }

  const MatrixX<Scalar>& G() const { return G_; }
  const VectorX<Scalar>& g() const { return g_; }
  int dim() const { return static_cast<int>(G_.cols()); }
  int rows() const { return static_cast<int>(G_.rows()); }

  /// Euclidean projection of s onto the polytope by enumerating candidate
  /// active sets of at most dim() linearly independent rows. Returns nullopt
  /// when no candidate is feasible, i.e. the set is empty.
  std::optional<VectorX<Scalar>> project(const VectorX<Scalar>& s) const {
    const int l = rows();
    const int n = dim();
    if (l > 24) {
      throw std::invalid_argument("Polytope::project: active-set enumeration limited to 24 rows");
    }
    const Scalar tol = Scalar(1e-10) * (Scalar(1) + g_.cwiseAbs().maxCoeff());
    std::optional<VectorX<Scalar>> best;
    Scalar best_dist = std::numeric_limits<Scalar>::infinity();
    for (unsigned mask = 0; mask < (1u << l); ++mask) {
      const int k = std::popcount(mask);
      if (k > n) continue;
      VectorX<Scalar> x = s;
      if (k > 0) {
        MatrixX<Scalar> Gs(k, n);
        VectorX<Scalar> gs(k);
        for (int r = 0, i = 0; r < l; ++r) {
          if (mask & (1u << r)) {
            Gs.row(i) = G_.row(r);
            gs(i) = g_(r);
            ++i;
          }
        }
        const MatrixX<Scalar> gram = Gs * Gs.transpose();
        Eigen::FullPivLU<MatrixX<Scalar>> lu(gram);
        if (lu.rank() < k) continue;
        x = s - Gs.transpose() * lu.solve(Gs * s - gs);
      }
      if (((G_ * x - g_).array() <= tol).all()) {
        const Scalar d = (x - s).norm();
        if (d < best_dist) {
          best_dist = d;
          best = x;
        }
      }
    }
    return best;
  }

 private:
  MatrixX<Scalar> G_;
  VectorX<Scalar> g_;
};

using Polytope = BasicPolytope<double>;

/// Multipliers certifying separation of a point from a polytope.
/// alpha is the penetration slack and stays zero in hard mode.
struct DualCertificate {
  Eigen::VectorXd lambda;
  double alpha = 0.0;
};

struct DistanceThresholds {
  double d_min = 0.0;
  double p_max = 0.0;
};

struct AgentCube {
  Eigen::VectorXd center;
  double delta = 0.0;
};

template <typename Scalar>
void check_dims(const BasicPolytope<Scalar>& P, const VectorX<Scalar>& s, const char* who) {
  if (s.size() != P.dim()) {
    throw std::invalid_argument(std::string(who) + ": point has dimension " +
                                std::to_string(s.size()) + ", polytope " +
                                std::to_string(P.dim()));
  }
}

template <typename Scalar>
bool contains(const BasicPolytope<Scalar>& P, const VectorX<Scalar>& s) {
  check_dims(P, s, "contains");
  return ((P.G() * s - P.g()).array() <= Scalar(kContainSlack)).all();
}

template <typename Scalar>
bool strictly_inside(const BasicPolytope<Scalar>& P, const VectorX<Scalar>& s) {
  return ((P.G() * s - P.g()).array() < -Scalar(kContainSlack)).all();
}

/// min ||t|| such that s + t lies in P. Testing oracle; s must not be interior.
template <typename Scalar>
Scalar dist_oracle(const BasicPolytope<Scalar>& P, const VectorX<Scalar>& s) {
  check_dims(P, s, "dist_oracle");
  if (strictly_inside(P, s)) {
    throw std::invalid_argument("dist_oracle: point is strictly inside the polytope");
  }
  const auto proj = P.project(s);
  if (!proj) throw std::invalid_argument("dist_oracle: polytope is empty");
  return (*proj - s).norm();
}

/// min ||t|| such that s + t leaves P: the distance to the nearest facet plane.
template <typename Scalar>
Scalar pen_oracle(const BasicPolytope<Scalar>& P, const VectorX<Scalar>& s) {
  check_dims(P, s, "pen_oracle");
  if (!contains(P, s)) {
    throw std::invalid_argument("pen_oracle: point is strictly outside the polytope");
  }
  Scalar best = std::numeric_limits<Scalar>::infinity();
  for (int r = 0; r < P.rows(); ++r) {
    const Scalar slack = P.g()(r) - P.G().row(r).dot(s);
    best = std::min(best, std::max(Scalar(0), slack) / P.G().row(r).norm());
  }
  return best;
}

/// Positive outside, negative inside, zero on the boundary.
template <typename Scalar>
Scalar sdf_oracle(const BasicPolytope<Scalar>& P, const VectorX<Scalar>& s) {
  check_dims(P, s, "sdf_oracle");
  if (strictly_inside(P, s)) return -pen_oracle(P, s);
  return dist_oracle(P, s);
}

template <typename Scalar>
void check_certificate_sign(const VectorX<Scalar>& lambda, const char* who) {
  if ((lambda.array() < Scalar(0)).any()) {
    throw std::invalid_argument(std::string(who) + ": lambda has negative entries");
  }
}

/// (G s - g)^T lambda, a lower bound on dist(s, P) for any lambda >= 0 with
/// ||G^T lambda||_2 <= 1.
template <typename Scalar>
Scalar hard_certificate_value(const BasicPolytope<Scalar>& P, const VectorX<Scalar>& s,
                              const VectorX<Scalar>& lambda) {
  check_dims(P, s, "hard_certificate_value");
  if (lambda.size() != P.rows()) {
    throw std::invalid_argument("hard_certificate_value: lambda size does not match G rows");
  }
  check_certificate_sign(lambda, "hard_certificate_value");
  if ((P.G().transpose() * lambda).norm() > Scalar(1) + Scalar(1e-9)) {
    throw std::invalid_argument("hard_certificate_value: ||G^T lambda||_2 exceeds 1");
  }
  return (P.G() * s - P.g()).dot(lambda);
}

/// Penetration form with slack: ||G^T lambda||_2 = 1 and (G s - g)^T lambda >= -alpha.
template <typename Scalar>
bool soft_certificate_check(const BasicPolytope<Scalar>& P, const VectorX<Scalar>& s,
                            const VectorX<Scalar>& lambda, Scalar alpha) {
  check_dims(P, s, "soft_certificate_check");
  if (lambda.size() != P.rows() || (lambda.array() < Scalar(0)).any()) return false;
  const Scalar norm = (P.G().transpose() * lambda).norm();
  if (std::abs(norm - Scalar(1)) > Scalar(1e-6)) return false;
  return (P.G() * s - P.g()).dot(lambda) >= -alpha - Scalar(1e-12);
}

template <typename Scalar>
struct CertifiedDistance {
  Scalar value = Scalar(0);
  VectorX<Scalar> lambda;
  int sweeps = 0;
};

/// Best certificate value max (G s - g)^T lambda over lambda >= 0,
/// ||G^T lambda|| <= 1. Solves the projection dual
///   max_{mu >= 0} (G s - g)^T mu - 1/2 ||G^T mu||^2
/// by Hildreth's coordinate ascent; lambda = mu / ||G^T mu||.
template <typename Scalar>
CertifiedDistance<Scalar> max_certified_distance(const BasicPolytope<Scalar>& P,
                                                 const VectorX<Scalar>& s,
                                                 int max_sweeps = 200000) {
  check_dims(P, s, "max_certified_distance");
  const int l = P.rows();
  const VectorX<Scalar> c = P.G() * s - P.g();
  const VectorX<Scalar> row_sq = P.G().rowwise().squaredNorm();
  VectorX<Scalar> mu = VectorX<Scalar>::Zero(l);
  VectorX<Scalar> w = VectorX<Scalar>::Zero(P.dim());
  CertifiedDistance<Scalar> out;
  const Scalar scale = Scalar(1) + c.cwiseAbs().maxCoeff();
  for (out.sweeps = 0; out.sweeps < max_sweeps; ++out.sweeps) {
    Scalar change(0);
    for (int r = 0; r < l; ++r) {
      const Scalar next = std::max(Scalar(0), mu(r) + (c(r) - P.G().row(r).dot(w)) / row_sq(r));
      const Scalar d = next - mu(r);
      if (d != Scalar(0)) {
        w += d * P.G().row(r).transpose();
        mu(r) = next;
        change = std::max(change, std::abs(d) * std::sqrt(row_sq(r)));
      }
    }
    if (change <= Scalar(1e-15) * scale) break;
    if (!std::isfinite(mu.sum()) || mu.sum() > Scalar(1e15)) {
      throw std::invalid_argument("max_certified_distance: dual unbounded, polytope is empty");
    }
  }
  const Scalar wn = w.norm();
  if (wn <= Scalar(1e-300)) {
    out.lambda = VectorX<Scalar>::Zero(l);
    out.value = Scalar(0);
    return out;
  }
  out.lambda = mu / wn;
  out.value = c.dot(out.lambda);
  return out;
}

/// Center-relative polytope of a cube with half-width delta: G = [I; -I], g = delta 1.
template <typename Scalar = double>
BasicPolytope<Scalar> agent_cube_polytope(Scalar delta, int n) {
  if (!(delta > Scalar(0))) {
    throw std::invalid_argument("agent_cube_polytope: delta must be positive");
  }
  if (n < 1) throw std::invalid_argument("agent_cube_polytope: dimension must be positive");
  MatrixX<Scalar> G(2 * n, n);
  G << MatrixX<Scalar>::Identity(n, n), -MatrixX<Scalar>::Identity(n, n);
  return BasicPolytope<Scalar>(std::move(G), VectorX<Scalar>::Constant(2 * n, delta), false);
}

/// Polytope of a cube placed at `cube.center`.
inline Polytope placed_cube(const AgentCube& cube) {
  const int n = static_cast<int>(cube.center.size());
  Polytope rel = agent_cube_polytope(cube.delta, n);
  return Polytope(rel.G(), rel.g() + rel.G() * cube.center, false);
}

/// G^T lambda for the cube matrix: lambda_+ - lambda_-.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> cube_gt_lambda(
    const Eigen::MatrixBase<Derived>& lambda) {
  const Eigen::Index n = lambda.size() / 2;
  return lambda.head(n) - lambda.tail(n);
}

struct PairwiseResidual {
  double ineq = 0.0;  // feasible iff >= 0
  double norm = 0.0;  // feasible iff == 0
};

/// Residuals of (G (s_i - s_j) - delta 1)^T lambda >= -alpha and ||G^T lambda||_2 = 1
/// for the cube matrix G.
inline PairwiseResidual pairwise_constraint_residual(const Eigen::VectorXd& s_i,
                                                     const Eigen::VectorXd& s_j, double delta,
                                                     const Eigen::VectorXd& lambda,
                                                     double alpha) {
  const Eigen::Index n = s_i.size();
  if (s_j.size() != n || lambda.size() != 2 * n) {
    throw std::invalid_argument("pairwise_constraint_residual: dimension mismatch");
  }
  check_certificate_sign(lambda, "pairwise_constraint_residual");
  const Eigen::VectorXd r = s_i - s_j;
  const Eigen::VectorXd w = cube_gt_lambda(lambda);
  PairwiseResidual out;
  out.ineq = r.dot(w) - delta * lambda.sum() + alpha;
  out.norm = w.norm() - 1.0;
  return out;
}

/// Unit certificate on the cube face best aligned with the relative position r
/// (ties go to the lowest row index).
inline Eigen::VectorXd aligned_face_certificate(const Eigen::VectorXd& r) {
  const Eigen::Index n = r.size();
  Eigen::VectorXd gr(2 * n);
  gr << r, -r;
  Eigen::Index best = 0;
  gr.maxCoeff(&best);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(2 * n);
  lambda(best) = 1.0;
  return lambda;
}

}  // namespace dmpc

#endif  // DMPC_GEOMETRY_HPP
