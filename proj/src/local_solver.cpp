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

#include "dmpc/local_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dmpc {

const char* to_string(ConstraintMode mode) {
  return mode == ConstraintMode::kHard ? "hard" : "soft";
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged:
      return "converged";
    case SolveStatus::kMaxIters:
      return "max_iters";
    case SolveStatus::kInfeasible:
      return "infeasible";
  }
  return "unknown";
}

CertificateSet::CertificateSet(int agents, int horizon, int n)
    : agents_(agents), horizon_(horizon), items_(static_cast<std::size_t>(agents * horizon)) {
  for (auto& c : items_) c.lambda = Eigen::VectorXd::Zero(2 * n);
}

int CertificateSet::index(int j, int k) const {
  if (j < 0 || j >= agents_ || k < 1 || k > horizon_) {
    throw std::out_of_range("CertificateSet: index (" + std::to_string(j) + ", " +
                            std::to_string(k) + ") out of range");
  }
  return j * horizon_ + (k - 1);
}

LocalProblem make_local_problem(int agent_id, int agents, const DiscreteModel<double>& model,
                                int horizon, Eigen::VectorXd s0, GoalSpec goal,
                                CostWeights weights, double delta, ConstraintMode mode,
                                double rho) {
  LocalProblem p;
  p.agent_id = agent_id;
  p.agents = agents;
  p.model = model;
  p.horizon = horizon;
  p.s0 = std::move(s0);
  p.goal = std::move(goal);
  p.weights = std::move(weights);
  p.delta = delta;
  p.mode = mode;
  p.rho = rho;
  p.v_bar = CopyVector(p.layout());
  p.gamma = CopyVector(p.layout());
  return p;
}

void validate(const LocalProblem& p) {
  const int n = p.model.n;
  if (n != 2 && n != 3) throw std::invalid_argument("LocalProblem: dimension must be 2 or 3");
  if (p.horizon < 1) throw std::invalid_argument("LocalProblem: horizon must be >= 1");
  if (!(p.delta > 0)) throw std::invalid_argument("LocalProblem: delta must be positive");
  if (!(p.rho >= 0)) throw std::invalid_argument("LocalProblem: rho must be >= 0");
  if (p.agents < 1 || p.agent_id < 0 || p.agent_id >= p.agents) {
    throw std::invalid_argument("LocalProblem: agent id out of range");
  }
  if (p.s0.size() != 2 * n || !p.s0.allFinite()) {
    throw std::invalid_argument("LocalProblem: initial state must be finite with size 2n");
  }
  if (p.goal.s_g.size() != 2 * n) throw std::invalid_argument("LocalProblem: goal size");
  validate(p.weights, n);
  if (p.v_bar.layout() != p.layout() || p.gamma.layout() != p.layout()) {
    throw std::invalid_argument("LocalProblem: v_bar / gamma shape does not match M x N");
  }
  if (p.rho == 0 && !p.gamma.data().isZero(0)) {
    throw std::invalid_argument("LocalProblem: rho = 0 requires gamma = 0");
  }
  if (p.thresholds.d_min < 0 || p.thresholds.p_max < 0) {
    throw std::invalid_argument("LocalProblem: distance thresholds must be >= 0");
  }
  for (const auto* b : {&p.workspace, &p.input_bounds}) {
    if (*b && ((*b)->lower.size() != n || (*b)->upper.size() != n ||
               ((*b)->lower.array() > (*b)->upper.array()).any())) {
      throw std::invalid_argument("LocalProblem: box bounds must have size n and lower <= upper");
    }
  }
}

void validate(const SolverOptions& o) {
  if (o.max_outer_iters < 1 || o.max_inner_iters < 1 || !(o.constraint_tolerance > 0) ||
      !(o.stationarity_tolerance > 0) || !(o.initial_penalty > 0) || !(o.penalty_growth > 1) ||
      !(o.fd_step > 0)) {
    throw std::invalid_argument(
        "SolverOptions: iteration limits must be >= 1, tolerances positive, growth > 1");
  }
}

struct LocalNlp::Accumulated {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd Huu;
  std::vector<Eigen::MatrixXd> Hbb;
  std::vector<Eigen::MatrixXd> Hub;
};

LocalNlp::LocalNlp(const LocalProblem& p) : p_(p) {
  validate(p_);
  layout_ = p_.layout();
  n_ = p_.model.n;
  N_ = p_.horizon;
  nu_ = n_ * N_;
  soft_ = p_.mode == ConstraintMode::kSoft;
  d_min_ = soft_ ? 0.0 : p_.thresholds.d_min;
  block_size_ = 3 * n_ + (soft_ ? 1 : 0);
  // Unit-norm certificates in both modes: any feasible hard-mode certificate
  // rescales to unit norm, and excluding lambda = 0 removes a stationary trap.
  cons_per_block_ = 2;

  int offset = nu_;
  for (int j = 0; j < p_.agents; ++j) {
    if (j == p_.agent_id) continue;
    for (int k = 1; k <= N_; ++k) {
      blocks_.push_back({j, k, offset});
      offset += block_size_;
    }
  }
  num_vars_ = offset;
  bounded_.assign(num_vars_, false);
  for (const auto& b : blocks_) {
    for (int t = n_; t < block_size_; ++t) bounded_[b.offset + t] = true;
  }

  // Condensing: x = x_free + Su u over states 0..N.
  const int sd = 2 * n_;
  x_free_.resize(sd * (N_ + 1));
  Su_ = Eigen::MatrixXd::Zero(sd * (N_ + 1), nu_);
  x_free_.head(sd) = p_.s0;
  for (int k = 0; k < N_; ++k) {
    x_free_.segment(sd * (k + 1), sd) = p_.model.Ak * x_free_.segment(sd * k, sd);
    Su_.block(sd * (k + 1), 0, sd, nu_) = p_.model.Ak * Su_.block(sd * k, 0, sd, nu_);
    Su_.block(sd * (k + 1), n_ * k, sd, n_) += p_.model.Bk;
  }

  // Own block: stage/terminal cost plus consensus terms, quadratic in u.
  const auto& w = p_.weights;
  own_H_ = Eigen::MatrixXd::Zero(nu_, nu_);
  own_f_ = Eigen::VectorXd::Zero(nu_);
  own_c_ = 0.0;
  for (int k = 0; k <= N_; ++k) {
    const Eigen::MatrixXd& W = k < N_ ? w.Q : w.Qf;
    const Eigen::MatrixXd Sk = Su_.middleRows(sd * k, sd);
    const Eigen::VectorXd e = x_free_.segment(sd * k, sd) - p_.goal.s_g;
    own_H_ += 2.0 * Sk.transpose() * W * Sk;
    own_f_ += 2.0 * Sk.transpose() * W * e;
    own_c_ += e.dot(W * e);
  }
  for (int k = 0; k < N_; ++k) own_H_.block(n_ * k, n_ * k, n_, n_) += 2.0 * w.R;

  const int i = p_.agent_id;
  const auto vbar_own = p_.v_bar.block(i);
  const auto gam_own = p_.gamma.block(i);
  const int ss = layout_.states_size();
  Eigen::MatrixXd T(layout_.block_size(), nu_);
  T.topRows(ss) = Su_;
  T.bottomRows(nu_).setIdentity();
  Eigen::VectorXd t0 = Eigen::VectorXd::Zero(layout_.block_size());
  t0.head(ss) = x_free_;
  const Eigen::VectorXd d0 = t0 - vbar_own;
  own_H_ += p_.rho * T.transpose() * T;
  own_f_ += T.transpose() * (gam_own + p_.rho * d0);
  own_c_ += gam_own.dot(d0) + 0.5 * p_.rho * d0.squaredNorm();

  // Closed-form copies: every non-own entry except positions at k >= 1.
  closed_form_c_ = 0.0;
  if (p_.rho > 0) {
    for (int j = 0; j < p_.agents; ++j) {
      if (j == i) continue;
      Eigen::VectorXd g = p_.gamma.block(j);
      for (int k = 1; k <= N_; ++k) {
        g.segment(sd * k, n_).setZero();
      }
      closed_form_c_ -= g.squaredNorm() / (2.0 * p_.rho);
    }
  }

  // Linear inequality rows a^T u + b >= 0.
  std::vector<std::pair<Eigen::VectorXd, double>> rows;
  if (p_.workspace) {
    for (int k = 1; k <= N_; ++k) {
      for (int d = 0; d < n_; ++d) {
        const Eigen::VectorXd a = Su_.row(sd * k + d).transpose();
        const double x0 = x_free_(sd * k + d);
        rows.emplace_back(a, x0 - p_.workspace->lower(d));
        rows.emplace_back(-a, p_.workspace->upper(d) - x0);
      }
    }
  }
  if (p_.input_bounds) {
    for (int k = 0; k < N_; ++k) {
      for (int d = 0; d < n_; ++d) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(nu_);
        a(n_ * k + d) = 1.0;
        rows.emplace_back(a, -p_.input_bounds->lower(d));
        rows.emplace_back(-a, p_.input_bounds->upper(d));
      }
    }
  }
  lin_A_.resize(static_cast<Eigen::Index>(rows.size()), nu_);
  lin_b_.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    lin_A_.row(static_cast<Eigen::Index>(r)) = rows[r].first.transpose();
    lin_b_(static_cast<Eigen::Index>(r)) = rows[r].second;
  }
  num_cons_ = static_cast<int>(blocks_.size()) * cons_per_block_ + static_cast<int>(rows.size());
}

Eigen::VectorXd LocalNlp::own_position(const Eigen::VectorXd& z, int k) const {
  const int sd = 2 * n_;
  return x_free_.segment(sd * k, n_) + Su_.block(sd * k, 0, n_, nu_) * z.head(nu_);
}

Eigen::VectorXd LocalNlp::pack(const CopyVector& v, const CertificateSet& certs) const {
  if (v.layout() != layout_) throw std::invalid_argument("LocalNlp::pack: copy vector shape");
  Eigen::VectorXd z(num_vars_);
  for (int k = 0; k < N_; ++k) z.segment(n_ * k, n_) = v.input(p_.agent_id, k);
  for (const auto& b : blocks_) {
    z.segment(b.offset, n_) = v.position(b.neighbor, b.step);
    const auto& c = certs.at(b.neighbor, b.step);
    if (c.lambda.size() != 2 * n_) throw std::invalid_argument("LocalNlp::pack: lambda size");
    z.segment(b.offset + n_, 2 * n_) = c.lambda;
    if (soft_) z(b.offset + 3 * n_) = c.alpha;
  }
  return z;
}

void LocalNlp::unpack(const Eigen::VectorXd& z, CopyVector& v, CertificateSet& certs) const {
  v = CopyVector(layout_);
  if (p_.rho > 0) {
    v.data() = p_.v_bar.data() - p_.gamma.data() / p_.rho;
  } else {
    v.data() = p_.v_bar.data();
  }
  const int i = p_.agent_id;
  const Eigen::VectorXd x = x_free_ + Su_ * z.head(nu_);
  v.block(i).head(layout_.states_size()) = x;
  for (int k = 0; k < N_; ++k) v.input(i, k) = z.segment(n_ * k, n_);
  certs = CertificateSet(p_.agents, N_, n_);
  for (const auto& b : blocks_) {
    v.position(b.neighbor, b.step) = z.segment(b.offset, n_);
    auto& c = certs.at(b.neighbor, b.step);
    c.lambda = z.segment(b.offset + n_, 2 * n_);
    c.alpha = soft_ ? z(b.offset + 3 * n_) : 0.0;
  }
}

Eigen::VectorXd LocalNlp::initial_point(const LocalWarmStart& warm) const {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(num_vars_);
  const bool have_v = warm.v && warm.v->layout() == layout_;
  const bool have_c = warm.certificates && warm.certificates->agents() == p_.agents &&
                      warm.certificates->horizon() == N_;
  if (have_v) {
    for (int k = 0; k < N_; ++k) z.segment(n_ * k, n_) = warm.v->input(p_.agent_id, k);
  }
  for (const auto& b : blocks_) {
    Eigen::VectorXd q;
    if (have_v) {
      q = warm.v->position(b.neighbor, b.step);
    } else if (p_.rho > 0) {
      q = p_.v_bar.position(b.neighbor, b.step) - p_.gamma.position(b.neighbor, b.step) / p_.rho;
    } else {
      q = p_.v_bar.position(b.neighbor, b.step);
    }
    z.segment(b.offset, n_) = q;
    const Eigen::VectorXd r = own_position(z, b.step) - q;
    Eigen::VectorXd lambda;
    double alpha = 0.0;
    if (have_c) {
      const auto& c = warm.certificates->at(b.neighbor, b.step);
      if (c.lambda.size() == 2 * n_ && cube_gt_lambda(c.lambda).norm() > 1e-6) {
        lambda = c.lambda.cwiseMax(0.0);
        alpha = std::max(0.0, c.alpha);
      }
    }
    if (lambda.size() == 0) {
      lambda = aligned_face_certificate(r);
      alpha = std::max(0.0, -(r.dot(cube_gt_lambda(lambda)) - p_.delta * lambda.sum()));
    }
    z.segment(b.offset + n_, 2 * n_) = lambda;
    if (soft_) z(b.offset + 3 * n_) = alpha;
  }
  project(z);
  return z;
}

int LocalNlp::reset_degenerate_certificates(Eigen::VectorXd& z) const {
  int count = 0;
  for (const auto& b : blocks_) {
    auto lambda = z.segment(b.offset + n_, 2 * n_);
    if (cube_gt_lambda(lambda).norm() >= 0.5) continue;
    const Eigen::VectorXd r = own_position(z, b.step) - z.segment(b.offset, n_);
    lambda = aligned_face_certificate(r);
    if (soft_) {
      z(b.offset + 3 * n_) =
          std::max(0.0, -(r.dot(cube_gt_lambda(lambda)) - p_.delta * lambda.sum()));
    }
    ++count;
  }
  return count;
}

void LocalNlp::project(Eigen::VectorXd& z) const {
  for (int t = 0; t < num_vars_; ++t) {
    if (bounded_[t] && z(t) < 0.0) z(t) = 0.0;
  }
}

double LocalNlp::projected_gradient_norm(const Eigen::VectorXd& z,
                                         const Eigen::VectorXd& grad) const {
  double worst = 0.0;
  for (int t = 0; t < num_vars_; ++t) {
    double step = grad(t);
    if (bounded_[t]) step = z(t) - std::max(0.0, z(t) - grad(t));
    worst = std::max(worst, std::abs(step));
  }
  return worst;
}

namespace {

// Augmented-Lagrangian (PHR) term for c >= 0 with multiplier nu and penalty mu.
// Returns t = max(0, nu - mu c); the term's gradient is -t grad(c).
struct PhrTerm {
  double value = 0.0;
  double t = 0.0;
  bool active = false;
};

PhrTerm phr(double c, double nu, double mu) {
  PhrTerm out;
  const double s = nu - mu * c;
  if (s > 0) {
    out.active = true;
    out.t = s;
    out.value = (s * s - nu * nu) / (2.0 * mu);
  } else {
    out.value = -nu * nu / (2.0 * mu);
  }
  return out;
}

// Equality c = 0: value -nu c + mu c^2 / 2, same sign convention as phr().
PhrTerm phr_equality(double c, double nu, double mu) {
  PhrTerm out;
  out.active = true;
  out.t = nu - mu * c;
  out.value = -nu * c + 0.5 * mu * c * c;
  return out;
}

}  // namespace

void LocalNlp::accumulate(const Eigen::VectorXd& z, const PenaltyState* ps, bool want_hessian,
                          Accumulated& acc) const {
  if (z.size() != num_vars_) throw std::invalid_argument("LocalNlp: point has wrong size");
  if (ps && ps->multipliers.size() != num_cons_) {
    throw std::invalid_argument("LocalNlp: multiplier vector has wrong size");
  }
  const int n = n_;
  const int sd = 2 * n;
  const double rho = p_.rho;
  const double mu = ps ? ps->penalty : 1.0;
  const auto u = z.head(nu_);

  acc.grad = Eigen::VectorXd::Zero(num_vars_);
  const Eigen::VectorXd Hu = own_H_ * u;
  acc.value = 0.5 * u.dot(Hu) + own_f_.dot(u) + own_c_ + closed_form_c_;
  acc.grad.head(nu_) = Hu + own_f_;
  if (want_hessian) {
    acc.Huu = own_H_;
    acc.Hbb.assign(blocks_.size(), Eigen::MatrixXd());
    acc.Hub.assign(blocks_.size(), Eigen::MatrixXd());
  }

  const Eigen::VectorXd x = x_free_ + Su_ * u;
  // Derivatives with respect to own positions, per step.
  std::vector<Eigen::VectorXd> gp(N_ + 1, Eigen::VectorXd::Zero(n));
  std::vector<Eigen::MatrixXd> Hp;
  if (want_hessian) Hp.assign(N_ + 1, Eigen::MatrixXd::Zero(n, n));

  const int bs = block_size_;
  Eigen::VectorXd gh(bs), gc(bs);
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    const Block& b = blocks_[bi];
    const int off = b.offset;
    const auto q = z.segment(off, n);
    const auto lambda = z.segment(off + n, 2 * n);
    const Eigen::VectorXd qbar = p_.v_bar.position(b.neighbor, b.step);
    const Eigen::VectorXd gq = p_.gamma.position(b.neighbor, b.step);

    const Eigen::VectorXd dq = q - qbar;
    acc.value += gq.dot(dq) + 0.5 * rho * dq.squaredNorm();
    acc.grad.segment(off, n) += gq + rho * dq;
    if (soft_) {
      acc.value += p_.weights.kappa * z(off + 3 * n);
      acc.grad(off + 3 * n) += p_.weights.kappa;
    }

    Eigen::MatrixXd Hb, Hcross;
    if (want_hessian) {
      Hb = Eigen::MatrixXd::Zero(bs, bs);
      Hb.topLeftCorner(n, n).diagonal().array() += rho;
      Hcross = Eigen::MatrixXd::Zero(n, bs);
    }
    if (!ps) {
      if (want_hessian) {
        acc.Hbb[bi] = std::move(Hb);
        acc.Hub[bi] = Eigen::MatrixXd::Zero(nu_, bs);
      }
      continue;
    }

    const Eigen::VectorXd r = x.segment(sd * b.step, n) - q;
    const Eigen::VectorXd w = lambda.head(n) - lambda.tail(n);
    const double alpha = soft_ ? z(off + 3 * n) : 0.0;
    const int ci = static_cast<int>(bi) * cons_per_block_;

    // Certificate inequality h = r.w - delta sum(lambda) + alpha - d_min >= 0.
    {
      const double h = r.dot(w) - p_.delta * lambda.sum() + alpha - d_min_;
      const PhrTerm term = phr(h, ps->multipliers(ci), mu);
      acc.value += term.value;
      if (term.active) {
        gh.setZero();
        gh.head(n) = -w;
        gh.segment(n, n) = r.array() - p_.delta;
        gh.segment(2 * n, n) = -r.array() - p_.delta;
        if (soft_) gh(3 * n) = 1.0;
        gp[b.step] += -term.t * w;
        acc.grad.segment(off, bs) += -term.t * gh;
        if (want_hessian) {
          Hp[b.step] += mu * w * w.transpose();
          Hcross += mu * w * gh.transpose();
          Hb += mu * gh * gh.transpose();
          // Gauss-Newton: the bilinear r.w curvature is left out, it makes the
          // block indefinite and the shifted step crawls.
        }
      }
    }
    // Norm condition 1 - ||w||^2 = 0.
    {
      const PhrTerm term = phr_equality(1.0 - w.squaredNorm(), ps->multipliers(ci + 1), mu);
      acc.value += term.value;
      gc.setZero();
      gc.segment(n, n) = -2.0 * w;
      gc.segment(2 * n, n) = 2.0 * w;
      acc.grad.segment(off, bs) += -term.t * gc;
      if (want_hessian) {
        Hb += mu * gc * gc.transpose();
        // d2c/dlambda2 = -2 [[I, -I], [-I, I]].
        const double k2 = 2.0 * term.t;
        for (int a = 0; a < n; ++a) {
          Hb(n + a, n + a) += k2;
          Hb(2 * n + a, 2 * n + a) += k2;
          Hb(n + a, 2 * n + a) -= k2;
          Hb(2 * n + a, n + a) -= k2;
        }
      }
    }
    if (want_hessian) {
      acc.Hub[bi] = Su_.block(sd * b.step, 0, n, nu_).transpose() * Hcross;
      acc.Hbb[bi] = std::move(Hb);
    }
  }

  for (int k = 1; k <= N_; ++k) {
    const auto Ek = Su_.block(sd * k, 0, n, nu_);
    acc.grad.head(nu_) += Ek.transpose() * gp[k];
    if (want_hessian) acc.Huu += Ek.transpose() * Hp[k] * Ek;
  }

  if (ps && lin_A_.rows() > 0) {
    const int base = static_cast<int>(blocks_.size()) * cons_per_block_;
    const Eigen::VectorXd c = lin_A_ * u + lin_b_;
    for (Eigen::Index r = 0; r < c.size(); ++r) {
      const PhrTerm term = phr(c(r), ps->multipliers(base + r), mu);
      acc.value += term.value;
      if (!term.active) continue;
      acc.grad.head(nu_) += -term.t * lin_A_.row(r).transpose();
      if (want_hessian) acc.Huu += mu * lin_A_.row(r).transpose() * lin_A_.row(r);
    }
  }
}

double LocalNlp::objective(const Eigen::VectorXd& z) const {
  Accumulated acc;
  accumulate(z, nullptr, false, acc);
  return acc.value;
}

Eigen::VectorXd LocalNlp::objective_gradient(const Eigen::VectorXd& z) const {
  Accumulated acc;
  accumulate(z, nullptr, false, acc);
  return acc.grad;
}

double LocalNlp::merit(const Eigen::VectorXd& z, const PenaltyState& ps) const {
  Accumulated acc;
  accumulate(z, &ps, false, acc);
  return acc.value;
}

Eigen::VectorXd LocalNlp::merit_gradient(const Eigen::VectorXd& z, const PenaltyState& ps) const {
  Accumulated acc;
  accumulate(z, &ps, false, acc);
  return acc.grad;
}

Eigen::MatrixXd LocalNlp::merit_hessian(const Eigen::VectorXd& z, const PenaltyState& ps) const {
  Accumulated acc;
  accumulate(z, &ps, true, acc);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(num_vars_, num_vars_);
  H.topLeftCorner(nu_, nu_) = acc.Huu;
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    const int off = blocks_[bi].offset;
    H.block(off, off, block_size_, block_size_) = acc.Hbb[bi];
    H.block(0, off, nu_, block_size_) = acc.Hub[bi];
    H.block(off, 0, block_size_, nu_) = acc.Hub[bi].transpose();
  }
  return H;
}

Eigen::VectorXd LocalNlp::constraints(const Eigen::VectorXd& z) const {
  Eigen::VectorXd c(num_cons_);
  const int n = n_;
  const Eigen::VectorXd x = x_free_ + Su_ * z.head(nu_);
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    const Block& b = blocks_[bi];
    const auto q = z.segment(b.offset, n);
    const auto lambda = z.segment(b.offset + n, 2 * n);
    const Eigen::VectorXd r = x.segment(2 * n * b.step, n) - q;
    const Eigen::VectorXd w = lambda.head(n) - lambda.tail(n);
    const double alpha = soft_ ? z(b.offset + 3 * n) : 0.0;
    const int ci = static_cast<int>(bi) * cons_per_block_;
    c(ci) = r.dot(w) - p_.delta * lambda.sum() + alpha - d_min_;
    c(ci + 1) = 1.0 - w.squaredNorm();
  }
  if (lin_A_.rows() > 0) {
    c.tail(lin_A_.rows()) = lin_A_ * z.head(nu_) + lin_b_;
  }
  return c;
}

bool LocalNlp::is_equality(int row) const {
  return row < static_cast<int>(blocks_.size()) * cons_per_block_ && row % cons_per_block_ == 1;
}

double LocalNlp::violation(const Eigen::VectorXd& c) const {
  double v = 0.0;
  for (Eigen::Index r = 0; r < c.size(); ++r) {
    v = std::max(v, is_equality(static_cast<int>(r)) ? std::abs(c(r)) : -c(r));
  }
  return v;
}

Eigen::VectorXd LocalNlp::updated_multipliers(const Eigen::VectorXd& nu, const Eigen::VectorXd& c,
                                              double mu) const {
  Eigen::VectorXd out = nu - mu * c;
  for (Eigen::Index r = 0; r < out.size(); ++r) {
    if (!is_equality(static_cast<int>(r))) out(r) = std::max(0.0, out(r));
  }
  return out;
}

Eigen::MatrixXd LocalNlp::constraint_jacobian(const Eigen::VectorXd& z) const {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(num_cons_, num_vars_);
  const int n = n_;
  const Eigen::VectorXd x = x_free_ + Su_ * z.head(nu_);
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    const Block& b = blocks_[bi];
    const int off = b.offset;
    const auto q = z.segment(off, n);
    const auto lambda = z.segment(off + n, 2 * n);
    const Eigen::VectorXd r = x.segment(2 * n * b.step, n) - q;
    const Eigen::VectorXd w = lambda.head(n) - lambda.tail(n);
    const int ci = static_cast<int>(bi) * cons_per_block_;
    J.row(ci).head(nu_) = w.transpose() * Su_.block(2 * n * b.step, 0, n, nu_);
    J.row(ci).segment(off, n) = -w.transpose();
    J.row(ci).segment(off + n, n) = (r.array() - p_.delta).matrix().transpose();
    J.row(ci).segment(off + 2 * n, n) = (-r.array() - p_.delta).matrix().transpose();
    if (soft_) J(ci, off + 3 * n) = 1.0;
    J.row(ci + 1).segment(off + n, n) = -2.0 * w.transpose();
    J.row(ci + 1).segment(off + 2 * n, n) = 2.0 * w.transpose();
  }
  if (lin_A_.rows() > 0) {
    J.bottomLeftCorner(lin_A_.rows(), nu_) = lin_A_;
  }
  return J;
}

namespace {

// Makes a symmetric block positive definite: plain Cholesky if it succeeds with
// the requested floor, otherwise an eigenvalue shift.
Eigen::LLT<Eigen::MatrixXd> factor_pd(Eigen::MatrixXd& H, double floor) {
  H.diagonal().array() += floor;
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() == Eigen::Success) return llt;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  H.diagonal().array() += (floor - lo) + 1e-8 * (1.0 + std::abs(lo));
  llt.compute(H);
  return llt;
}

}  // namespace

Eigen::VectorXd LocalNlp::newton_direction(const Eigen::VectorXd& z, const PenaltyState& ps,
                                           const Eigen::VectorXd& grad, double active_eps,
                                           double regularization) const {
  Accumulated acc;
  accumulate(z, &ps, true, acc);
  const int bs = block_size_;
  Eigen::MatrixXd S = acc.Huu;
  Eigen::VectorXd rhs = -grad.head(nu_);
  std::vector<Eigen::MatrixXd> X(blocks_.size());
  std::vector<Eigen::VectorXd> Y(blocks_.size());

  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    const int off = blocks_[bi].offset;
    Eigen::MatrixXd& Hb = acc.Hbb[bi];
    Eigen::MatrixXd& Hub = acc.Hub[bi];
    Eigen::VectorXd gb = grad.segment(off, bs);
    for (int t = n_; t < bs; ++t) {
      if (z(off + t) <= active_eps && gb(t) > 0) {
        Hb.row(t).setZero();
        Hb.col(t).setZero();
        Hb(t, t) = 1.0;
        // Near-active entries step straight onto the bound.
        Hub.col(t).setZero();
        gb(t) = z(off + t);
      }
    }
    const auto llt = factor_pd(Hb, regularization);
    X[bi] = llt.solve(Hub.transpose());
    Y[bi] = llt.solve(gb);
    S.noalias() -= Hub * X[bi];
    rhs.noalias() += Hub * Y[bi];
  }

  Eigen::VectorXd d(num_vars_);
  const auto llt = factor_pd(S, regularization);
  d.head(nu_) = llt.solve(rhs);
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    d.segment(blocks_[bi].offset, bs) = -Y[bi] - X[bi] * d.head(nu_);
  }
  return d;
}

namespace {

constexpr double kMaxStep = 1.0;

struct InnerResult {
  int iterations = 0;
  double stationarity = 0.0;
};

InnerResult minimize_merit(const LocalNlp& nlp, Eigen::VectorXd& z, const PenaltyState& ps,
                           double tol, int max_iters) {
  InnerResult out;
  Eigen::VectorXd g = nlp.merit_gradient(z, ps);
  double f = nlp.merit(z, ps);
  out.stationarity = nlp.projected_gradient_norm(z, g);
  double reg = 1e-9;
  for (out.iterations = 0; out.iterations < max_iters; ++out.iterations) {
    if (out.stationarity <= tol) break;
    const double eps = std::min(1e-3, out.stationarity);
    Eigen::VectorXd d = nlp.newton_direction(z, ps, g, eps, reg);
    // Flat directions (certificates of inactive constraints) give huge steps.
    const double len = d.cwiseAbs().maxCoeff();
    if (len > kMaxStep) d *= kMaxStep / len;
    bool accepted = false;
    Eigen::VectorXd zt;
    double ft = f;
    double a = 1.0;
    for (int ls = 0; ls < 40 && g.dot(d) < 0; ++ls, a *= 0.5) {
      zt = z + a * d;
      nlp.project(zt);
      ft = nlp.merit(zt, ps);
      if (ft <= f + 1e-4 * g.dot(zt - z)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Fall back to a projected gradient step.
      a = 1.0 / std::max(1.0, g.cwiseAbs().maxCoeff());
      for (int ls = 0; ls < 60; ++ls, a *= 0.5) {
        zt = z - a * g;
        nlp.project(zt);
        ft = nlp.merit(zt, ps);
        if (ft <= f + 1e-4 * g.dot(zt - z)) {
          accepted = true;
          break;
        }
      }
      reg = std::min(1e3, std::max(reg * 100.0, 1e-6));
    } else {
      reg = std::max(1e-9, reg * 0.1);
    }
    if (!accepted) break;
    z = std::move(zt);
    f = ft;
    g = nlp.merit_gradient(z, ps);
    out.stationarity = nlp.projected_gradient_norm(z, g);
  }
  return out;
}

}  // namespace

LocalSolution solve_local(const LocalProblem& p, const LocalWarmStart& warm,
                          const SolverOptions& opts) {
  validate(opts);
  const LocalNlp nlp(p);
  Eigen::VectorXd z = nlp.initial_point(warm);

  PenaltyState ps;
  ps.penalty = opts.initial_penalty;
  ps.multipliers = Eigen::VectorXd::Zero(nlp.num_constraints());
  if (warm.multipliers && warm.multipliers->size() == nlp.num_constraints()) {
    ps.multipliers = nlp.updated_multipliers(*warm.multipliers, Eigen::VectorXd::Zero(nlp.num_constraints()), 0.0);
  }

  LocalSolution sol;
  sol.status = SolveStatus::kMaxIters;
  Eigen::VectorXd best_z = z;
  Eigen::VectorXd best_nu = ps.multipliers;
  double best_viol = std::numeric_limits<double>::infinity();
  double best_stat = std::numeric_limits<double>::infinity();
  double prev_viol = std::numeric_limits<double>::infinity();

  for (int outer = 0; outer < opts.max_outer_iters; ++outer) {
    sol.outer_iterations = outer + 1;
    const InnerResult inner =
        minimize_merit(nlp, z, ps, opts.stationarity_tolerance, opts.max_inner_iters);
    sol.inner_iterations += inner.iterations;
    // lambda = 0 is a stationary point of the norm condition; restart those
    // certificates on the face the copy currently lies against.
    if (nlp.reset_degenerate_certificates(z) > 0) continue;
    const Eigen::VectorXd c = nlp.constraints(z);
    const double viol = nlp.violation(c);
    ps.multipliers = nlp.updated_multipliers(ps.multipliers, c, ps.penalty);

    if (viol < best_viol - 1e-15 || (viol <= opts.constraint_tolerance &&
                                     inner.stationarity < best_stat)) {
      best_viol = viol;
      best_stat = inner.stationarity;
      best_z = z;
      best_nu = ps.multipliers;
    }
    if (viol <= opts.constraint_tolerance && inner.stationarity <= opts.stationarity_tolerance) {
      sol.status = SolveStatus::kConverged;
      best_z = z;
      best_nu = ps.multipliers;
      best_viol = viol;
      best_stat = inner.stationarity;
      break;
    }
    if (viol > opts.constraint_tolerance && viol > 0.25 * prev_viol) {
      ps.penalty = std::min(ps.penalty * opts.penalty_growth, opts.max_penalty);
    }
    prev_viol = viol;
  }

  if (sol.status != SolveStatus::kConverged && p.mode == ConstraintMode::kHard &&
      best_viol > opts.constraint_tolerance) {
    sol.status = SolveStatus::kInfeasible;
  }
  nlp.unpack(best_z, sol.v_plus, sol.certificates);
  sol.multipliers = best_nu;
  sol.feasibility = best_viol;
  sol.stationarity = best_stat;
  sol.objective = nlp.objective(best_z);
  for (const auto& b : nlp.blocks()) {
    sol.max_slack = std::max(sol.max_slack, sol.certificates.at(b.neighbor, b.step).alpha);
  }
  return sol;
}

KktResidual kkt_residual(const LocalProblem& p, const LocalSolution& candidate) {
  const LocalNlp nlp(p);
  const StackLayout layout = p.layout();
  if (candidate.v_plus.layout() != layout) {
    throw std::invalid_argument("kkt_residual: candidate shape does not match problem");
  }
  KktResidual out;
  const int i = p.agent_id;
  const CopyVector& v = candidate.v_plus;

  double feas = (v.state(i, 0) - p.s0).cwiseAbs().maxCoeff();
  feas = std::max(feas, dynamics_defect(p.model, v.trajectory(i)));

  CertificateSet certs = candidate.certificates;
  if (certs.empty()) certs = CertificateSet(p.agents, p.horizon, p.model.n);
  const Eigen::VectorXd z = nlp.pack(v, certs);
  const Eigen::VectorXd c = nlp.constraints(z);
  feas = std::max(feas, nlp.violation(c));
  for (const auto& b : nlp.blocks()) {
    const auto& cert = certs.at(b.neighbor, b.step);
    feas = std::max(feas, -cert.lambda.minCoeff());
    feas = std::max(feas, p.mode == ConstraintMode::kHard ? std::abs(cert.alpha) : -cert.alpha);
  }
  out.feasibility = std::max(0.0, feas);

  Eigen::VectorXd nu = Eigen::VectorXd::Zero(nlp.num_constraints());
  if (candidate.multipliers.size() == nlp.num_constraints()) nu = candidate.multipliers;
  Eigen::VectorXd grad = nlp.objective_gradient(z);
  if (nlp.num_constraints() > 0) grad -= nlp.constraint_jacobian(z).transpose() * nu;
  double stat = nlp.projected_gradient_norm(z, grad);

  // Closed-form copy entries: gradient gamma + rho (v - v_bar).
  const int sd = 2 * p.model.n;
  for (int j = 0; j < p.agents; ++j) {
    if (j == i) continue;
    Eigen::VectorXd g = p.gamma.block(j) + p.rho * (v.block(j) - p.v_bar.block(j));
    for (int k = 1; k <= p.horizon; ++k) g.segment(sd * k, p.model.n).setZero();
    if (g.size() > 0) stat = std::max(stat, g.cwiseAbs().maxCoeff());
  }
  out.stationarity = stat;
  return out;
}

Eigen::VectorXd objective_gradient(const LocalProblem& p, const Eigen::VectorXd& point,
                                   const PenaltyState* penalty) {
  const LocalNlp nlp(p);
  if (point.size() != nlp.num_variables()) {
    throw std::invalid_argument("objective_gradient: point has wrong size");
  }
  return penalty ? nlp.merit_gradient(point, *penalty) : nlp.objective_gradient(point);
}

CertificateSet initial_certificates(const LocalProblem& p, const CopyVector& v) {
  CertificateSet certs(p.agents, p.horizon, p.model.n);
  const int i = p.agent_id;
  for (int j = 0; j < p.agents; ++j) {
    if (j == i) continue;
    for (int k = 1; k <= p.horizon; ++k) {
      const Eigen::VectorXd r = v.position(i, k) - v.position(j, k);
      auto& c = certs.at(j, k);
      c.lambda = aligned_face_certificate(r);
      c.alpha = p.mode == ConstraintMode::kSoft
                    ? std::max(0.0, -(r.dot(cube_gt_lambda(c.lambda)) - p.delta))
                    : 0.0;
    }
  }
  return certs;
}

}  // namespace dmpc
