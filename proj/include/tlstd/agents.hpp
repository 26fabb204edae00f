// Copyright 2026 The tlstd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

#include "tlstd/envs.hpp"
#include "tlstd/linalg.hpp"
#include "tlstd/truncated_svd.hpp"

namespace tlstd {

/// z <- gamma * lambda * z + x, with the discount taken from the previous
/// transition so the trace resets on the first step after a terminal.
class EligibilityTrace {
 public:
  EligibilityTrace(Index dim, double lambda)
      : z_(Vector::Zero(dim)), lambda_(lambda) {
    if (lambda < 0.0 || lambda > 1.0) {
      throw std::invalid_argument("EligibilityTrace: lambda must be in [0, 1]");
    }
  }

  const Vector& advance(const Transition& tr) {
    if (tr.x.dim() != z_.size() || tr.x_next.dim() != z_.size()) {
      throw std::invalid_argument("EligibilityTrace: feature length mismatch");
    }
    z_ *= lambda_ * pending_discount_;
    tr.x.add_to(z_);
    pending_discount_ = tr.continue_discount;
    return z_;
  }

  const Vector& value() const { return z_; }
  double lambda() const { return lambda_; }

  void reset() {
    z_.setZero();
    pending_discount_ = 0.0;
  }

 private:
  Vector z_;
  double lambda_;
  double pending_discount_ = 0.0;
};

/// Mixing weight turning accumulated sums into running averages
/// (beta = k / (t + k) at a size-k flush) or exponentially down-weighting
/// the past (fixed beta).
struct BetaSchedule {
  enum class Mode { kRunningAverage, kConstant };

  Mode mode = Mode::kRunningAverage;
  double constant_value = 0.0;

  static BetaSchedule running_average() { return {}; }

  static BetaSchedule constant(double value) {
    if (value <= 0.0 || value >= 1.0) {
      throw std::invalid_argument("BetaSchedule: constant beta must be in (0, 1)");
    }
    return {Mode::kConstant, value};
  }
};

struct AgentConfig {
  std::string algorithm;  // "tlstd" | "lstd" | "ilstd" | "td"
  Index dim = 0;

  // tlstd
  Index rank = 0;
  Index batch_size = 1;
  BetaSchedule beta;
  double rel_cutoff = 0.01;
  int solve_every = 1;

  // shared
  double lambda = 0.0;

  // td / ilstd step sizes: alpha_t = alpha0 * (n0 + 1) / (n0 + t) when
  // decay is on, constant alpha0 otherwise.
  double alpha0 = 0.1;
  double n0 = 1000.0;
  bool decay_alpha = false;

  // ilstd
  int m = 1;

  // lstd
  double delta_init = 1e-3;
};

class Agent {
 public:
  virtual ~Agent() = default;
  /// Consumes one transition and returns the current weight vector.
  virtual const Vector& step(const Transition& tr) = 0;
  virtual const Vector& weights() const = 0;
  virtual Index dim() const = 0;
};

// ---------------------------------------------------------------------------

/// Incremental truncated-SVD least squares learner. The factorization tracks
/// the running average of the buffered outer products z (x - gamma x')^T; the
/// solution is read off the factorization in O(d r).
class TlstdAgent : public Agent {
 public:
  TlstdAgent(Index dim, Index rank, Index batch_size, double lambda,
             BetaSchedule beta = {}, double rel_cutoff = 0.01, int solve_every = 1)
      : svd_(dim, rank),
        trace_(dim, lambda),
        beta_(beta),
        batch_size_(batch_size),
        rel_cutoff_(rel_cutoff),
        solve_every_(solve_every),
        b_(Vector::Zero(dim)),
        w_(Vector::Zero(dim)),
        z_block_(dim, batch_size),
        d_block_(dim, batch_size) {
    if (batch_size < 1) throw std::invalid_argument("TlstdAgent: batch_size >= 1");
    if (solve_every < 1) throw std::invalid_argument("TlstdAgent: solve_every >= 1");
  }

  const Vector& step(const Transition& tr) override {
    const Vector& z = trace_.advance(tr);
    Vector diff = Vector::Zero(dim());
    tr.x.add_to(diff, 1.0);
    tr.x_next.add_to(diff, -tr.continue_discount);

    z_block_.col(buffered_) = z;
    d_block_.col(buffered_) = diff;
    ++buffered_;
    ++seen_;

    const double beta_b = beta_.mode == BetaSchedule::Mode::kConstant
                              ? beta_.constant_value
                              : 1.0 / static_cast<double>(seen_);
    b_ = (1.0 - beta_b) * b_ + beta_b * tr.reward * z;

    if (buffered_ >= batch_size_) flush();

    if (++steps_since_solve_ >= solve_every_) {
      w_ = svd_.solve(b_, rel_cutoff_);
      steps_since_solve_ = 0;
    }
    return w_;
  }

  const Vector& weights() const override { return w_; }
  Index dim() const override { return svd_.dim(); }
  const TruncatedSvd& factorization() const { return svd_; }
  std::int64_t samples_folded() const { return folded_; }

 private:
  void flush() {
    const auto k = static_cast<double>(buffered_);
    double sigma_scale;
    double column_weight;
    if (beta_.mode == BetaSchedule::Mode::kConstant) {
      const double beta = beta_.constant_value;
      sigma_scale = 1.0 - beta;
      column_weight = std::sqrt(beta / k);
    } else {
      const auto t = static_cast<double>(folded_);
      sigma_scale = t / (t + k);
      column_weight = 1.0 / std::sqrt(t + k);
    }
    if (svd_.width() > 0 && sigma_scale > 0.0) svd_.scale(sigma_scale);
    if (batch_size_ == 1) {
      svd_.rank_one_update(column_weight * z_block_.col(0),
                           column_weight * d_block_.col(0));
    } else {
      svd_.minibatch_update(column_weight * z_block_.leftCols(buffered_),
                            column_weight * d_block_.leftCols(buffered_));
    }
    folded_ += buffered_;
    buffered_ = 0;
  }

  TruncatedSvd svd_;
  EligibilityTrace trace_;
  BetaSchedule beta_;
  Index batch_size_;
  double rel_cutoff_;
  int solve_every_;
  Vector b_, w_;
  Matrix z_block_, d_block_;
  Index buffered_ = 0;
  std::int64_t seen_ = 0;
  std::int64_t folded_ = 0;
  int steps_since_solve_ = 0;
};

// ---------------------------------------------------------------------------

/// Exact LSTD(lambda): maintains (delta_init I + sum z d^T)^-1 by
/// Sherman-Morrison and solves on every step. O(d^2) per step.
class LstdAgent : public Agent {
 public:
  LstdAgent(Index dim, double lambda, double delta_init = 1e-3)
      : trace_(dim, lambda),
        inverse_(Matrix::Identity(dim, dim) / delta_init),
        b_(Vector::Zero(dim)),
        w_(Vector::Zero(dim)) {
    if (delta_init <= 0.0) {
      throw std::invalid_argument("LstdAgent: delta_init must be positive");
    }
  }

  const Vector& step(const Transition& tr) override {
    const Vector& z = trace_.advance(tr);
    Vector diff = Vector::Zero(dim());
    tr.x.add_to(diff, 1.0);
    tr.x_next.add_to(diff, -tr.continue_discount);

    const Vector inv_z = inverse_ * z;
    const double denom = 1.0 + diff.dot(inv_z);
    if (std::abs(denom) < 1e-12) {
      // Singular update: the sample is skipped rather than destabilizing the
      // inverse.
      ++skipped_;
    } else {
      const Vector inv_t_diff = inverse_.transpose() * diff;
      inverse_.noalias() -= (inv_z * inv_t_diff.transpose()) / denom;
      b_ += tr.reward * z;
    }
    w_ = inverse_ * b_;
    return w_;
  }

  const Vector& weights() const override { return w_; }
  Index dim() const override { return b_.size(); }
  std::int64_t skipped_updates() const { return skipped_; }

 private:
  EligibilityTrace trace_;
  Matrix inverse_;
  Vector b_, w_;
  std::int64_t skipped_ = 0;
};

// ---------------------------------------------------------------------------

/// TD(lambda) with an accumulating trace. O(d) per step, O(nnz) work on the
/// sparse parts.
class TdAgent : public Agent {
 public:
  TdAgent(Index dim, double lambda, double alpha0, bool decay_alpha = false,
          double n0 = 1000.0)
      : trace_(dim, lambda),
        w_(Vector::Zero(dim)),
        alpha0_(alpha0),
        n0_(n0),
        decay_alpha_(decay_alpha) {
    if (alpha0 <= 0.0) throw std::invalid_argument("TdAgent: alpha0 must be positive");
  }

  const Vector& step(const Transition& tr) override {
    ++t_;
    const double alpha =
        decay_alpha_ ? alpha0_ * (n0_ + 1.0) / (n0_ + static_cast<double>(t_))
                     : alpha0_;
    return step_with_alpha(tr, alpha);
  }

  const Vector& step_with_alpha(const Transition& tr, double alpha) {
    if (alpha <= 0.0) throw std::invalid_argument("TdAgent: alpha must be positive");
    const Vector& z = trace_.advance(tr);
    const double td_error = tr.reward + tr.continue_discount * tr.x_next.dot(w_) -
                            tr.x.dot(w_);
    w_ += alpha * td_error * z;
    return w_;
  }

  const Vector& weights() const override { return w_; }
  Index dim() const override { return w_.size(); }

 private:
  EligibilityTrace trace_;
  Vector w_;
  double alpha0_;
  double n0_;
  bool decay_alpha_;
  std::int64_t t_ = 0;
};

// ---------------------------------------------------------------------------

/// iLSTD(lambda): keeps the un-normalized sums A_t, b_t dense together with
/// the residual mu = b_t - A_t w, and descends the m largest residual
/// coordinates per step. alpha_t = alpha0 (n0 + 1) / (n0 + t); n0 <= 0 keeps
/// alpha fixed at alpha0.
class IlstdAgent : public Agent {
 public:
  IlstdAgent(Index dim, double lambda, int m, double alpha0, double n0)
      : trace_(dim, lambda),
        a_(Matrix::Zero(dim, dim)),
        b_(Vector::Zero(dim)),
        mu_(Vector::Zero(dim)),
        w_(Vector::Zero(dim)),
        m_(m),
        alpha0_(alpha0),
        n0_(n0) {
    if (m < 1) throw std::invalid_argument("IlstdAgent: m >= 1");
    if (alpha0 <= 0.0) throw std::invalid_argument("IlstdAgent: alpha0 must be positive");
  }

  const Vector& step(const Transition& tr) override {
    const Vector& z = trace_.advance(tr);
    Vector diff = Vector::Zero(dim());
    tr.x.add_to(diff, 1.0);
    tr.x_next.add_to(diff, -tr.continue_discount);

    a_.noalias() += z * diff.transpose();
    b_ += tr.reward * z;
    mu_ += z * (tr.reward - diff.dot(w_));
    ++t_;

    const double alpha =
        n0_ > 0.0 ? alpha0_ * (n0_ + 1.0) / (n0_ + static_cast<double>(t_))
                  : alpha0_;
    for (int pick = 0; pick < m_; ++pick) {
      Index j = 0;
      mu_.cwiseAbs().maxCoeff(&j);  // ties resolve to the lowest index
      const double delta = alpha * mu_(j);
      w_(j) += delta;
      mu_ -= delta * a_.col(j);
    }
    return w_;
  }

  const Vector& weights() const override { return w_; }
  Index dim() const override { return w_.size(); }
  const Vector& residual() const { return mu_; }
  const Matrix& system_matrix() const { return a_; }
  const Vector& system_rhs() const { return b_; }

 private:
  EligibilityTrace trace_;
  Matrix a_;
  Vector b_, mu_, w_;
  int m_;
  double alpha0_;
  double n0_;
  std::int64_t t_ = 0;
};

// ---------------------------------------------------------------------------

inline std::unique_ptr<Agent> make_agent(const AgentConfig& cfg) {
  if (cfg.dim < 1) throw std::invalid_argument("make_agent: dim must be positive");
  if (cfg.algorithm == "tlstd") {
    return std::make_unique<TlstdAgent>(cfg.dim, cfg.rank, cfg.batch_size,
                                        cfg.lambda, cfg.beta, cfg.rel_cutoff,
                                        cfg.solve_every);
  }
  if (cfg.algorithm == "lstd") {
    return std::make_unique<LstdAgent>(cfg.dim, cfg.lambda, cfg.delta_init);
  }
  if (cfg.algorithm == "td") {
    return std::make_unique<TdAgent>(cfg.dim, cfg.lambda, cfg.alpha0,
                                     cfg.decay_alpha, cfg.n0);
  }
  if (cfg.algorithm == "ilstd") {
    return std::make_unique<IlstdAgent>(cfg.dim, cfg.lambda, cfg.m, cfg.alpha0,
                                        cfg.n0);
  }
  throw std::invalid_argument("make_agent: unknown algorithm '" + cfg.algorithm + "'");
}

}  // namespace tlstd
