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
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "tlstd/features.hpp"
#include "tlstd/linalg.hpp"

namespace tlstd {

/// One sample in feature space. continue_discount equals gamma mid-episode
/// and 0 on a terminal transition; the eligibility trace resets on the first
/// step of the following episode.
struct Transition {
  FeatureVector x;
  FeatureVector x_next;
  double reward = 0.0;
  double continue_discount = 0.0;
};

class TransitionStream {
 public:
  virtual ~TransitionStream() = default;
  /// Next sample, or nullopt once the configured length is exhausted.
  virtual std::optional<Transition> next() = 0;
};

// ---------------------------------------------------------------------------
// Mountain Car

struct MountainCarState {
  double position = -0.5;
  double velocity = 0.0;
};

constexpr double kMountainCarMinPos = -1.2;
constexpr double kMountainCarMaxPos = 0.5;
constexpr double kMountainCarMaxVel = 0.07;

inline bool mountain_car_at_goal(const MountainCarState& s) {
  return s.position >= kMountainCarMaxPos;
}

/// Standard dynamics; reward is -1 per step and 0 on reaching the goal. The
/// velocity resets to zero at the left wall.
inline std::pair<MountainCarState, double> mountain_car_step(
    const MountainCarState& s, int action) {
  MountainCarState out;
  out.velocity = s.velocity + 0.001 * action - 0.0025 * std::cos(3.0 * s.position);
  out.velocity = std::clamp(out.velocity, -kMountainCarMaxVel, kMountainCarMaxVel);
  out.position = std::clamp(s.position + out.velocity, kMountainCarMinPos,
                            kMountainCarMaxPos);
  if (out.position <= kMountainCarMinPos) out.velocity = 0.0;
  const double reward = mountain_car_at_goal(out) ? 0.0 : -1.0;
  return {out, reward};
}

/// Pushes along the current velocity; zero velocity maps to +1.
inline int energy_pumping_policy(const MountainCarState& s) {
  return s.velocity >= 0.0 ? 1 : -1;
}

// ---------------------------------------------------------------------------
// Pendulum

struct PendulumState {
  double angle = std::numbers::pi;  // 0 is upright; wrapped to [-pi, pi]
  double angular_velocity = 0.0;
};

struct PendulumParams {
  double gravity = 9.8;
  double damping = 0.05;
  double torque_scale = 1.5;
  double dt = 0.01;
  double max_speed = 8.0;
};

/// Semi-implicit Euler step of a damped torque-actuated pendulum. The angle
/// is wrapped to [-pi, pi] and the speed clamped; reward is cos(angle).
inline std::pair<PendulumState, double> pendulum_step(
    const PendulumState& s, int action, const PendulumParams& params = {}) {
  PendulumState out;
  const double accel = params.gravity * std::sin(s.angle) +
                       params.torque_scale * action -
                       params.damping * s.angular_velocity;
  out.angular_velocity = s.angular_velocity + params.dt * accel;
  out.angular_velocity =
      std::clamp(out.angular_velocity, -params.max_speed, params.max_speed);
  out.angle = std::remainder(s.angle + params.dt * out.angular_velocity,
                             2.0 * std::numbers::pi);
  return {out, std::cos(out.angle)};
}

inline int pendulum_spinup_policy(const PendulumState& s) {
  return s.angular_velocity >= 0.0 ? 1 : -1;
}

// ---------------------------------------------------------------------------
// Generic environment wrapper used by streams and rollouts

/// Episodic (or continuing) environment under its fixed evaluation policy.
/// step() is a pure function of the passed state, which makes rollouts from
/// arbitrary start states trivial.
class Environment {
 public:
  struct Outcome {
    Vector next;
    double reward = 0.0;
    bool terminal = false;
  };

  virtual ~Environment() = default;
  virtual Index state_dim() const = 0;
  virtual Vector state_lows() const = 0;
  virtual Vector state_highs() const = 0;
  virtual Vector reset(std::mt19937_64& rng) const = 0;
  virtual Outcome step(const Vector& state, std::mt19937_64& rng) const = 0;
};

class MountainCarEnv : public Environment {
 public:
  enum class Start { kStandard, kUniform };

  explicit MountainCarEnv(Start start = Start::kStandard) : start_(start) {}

  Index state_dim() const override { return 2; }
  Vector state_lows() const override {
    return (Vector(2) << kMountainCarMinPos, -kMountainCarMaxVel).finished();
  }
  Vector state_highs() const override {
    return (Vector(2) << kMountainCarMaxPos, kMountainCarMaxVel).finished();
  }

  Vector reset(std::mt19937_64& rng) const override {
    Vector s(2);
    if (start_ == Start::kStandard) {
      std::uniform_real_distribution<double> pos(-0.6, -0.4);
      s << pos(rng), 0.0;
    } else {
      std::uniform_real_distribution<double> pos(kMountainCarMinPos, kMountainCarMaxPos);
      std::uniform_real_distribution<double> vel(-kMountainCarMaxVel, kMountainCarMaxVel);
      s << pos(rng), vel(rng);
    }
    return s;
  }

  Outcome step(const Vector& state, std::mt19937_64& /*rng*/) const override {
    const MountainCarState s{state(0), state(1)};
    const auto [next, reward] = mountain_car_step(s, energy_pumping_policy(s));
    Outcome out;
    out.next = (Vector(2) << next.position, next.velocity).finished();
    out.reward = reward;
    out.terminal = mountain_car_at_goal(next);
    return out;
  }

 private:
  Start start_;
};

/// Continuing task: no terminals, the spin-up policy keeps pumping energy.
class PendulumEnv : public Environment {
 public:
  explicit PendulumEnv(PendulumParams params = {}) : params_(params) {}

  Index state_dim() const override { return 2; }
  Vector state_lows() const override {
    return (Vector(2) << -std::numbers::pi, -params_.max_speed).finished();
  }
  Vector state_highs() const override {
    return (Vector(2) << std::numbers::pi, params_.max_speed).finished();
  }

  Vector reset(std::mt19937_64& rng) const override {
    std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> vel(-1.0, 1.0);
    return (Vector(2) << ang(rng), vel(rng)).finished();
  }

  Outcome step(const Vector& state, std::mt19937_64& /*rng*/) const override {
    const PendulumState s{state(0), state(1)};
    const auto [next, reward] = pendulum_step(s, pendulum_spinup_policy(s), params_);
    Outcome out;
    out.next = (Vector(2) << next.angle, next.angular_velocity).finished();
    out.reward = reward;
    out.terminal = false;
    return out;
  }

 private:
  PendulumParams params_;
};

/// Feature-space transition stream driven by an Environment under its fixed
/// policy. Deterministic given the seed. Episodes are capped as a safety net;
/// a cap hit is treated like a terminal.
class EnvStream : public TransitionStream {
 public:
  EnvStream(const Environment& env, const FeatureMap& features, double gamma,
            std::uint64_t seed, std::int64_t length,
            std::int64_t max_episode_steps = 100000)
      : env_(env),
        features_(features),
        gamma_(gamma),
        rng_(seed),
        remaining_(length),
        max_episode_steps_(max_episode_steps) {}

  std::optional<Transition> next() override {
    if (remaining_ <= 0) return std::nullopt;
    --remaining_;
    if (!state_) {
      state_ = env_.reset(rng_);
      episode_steps_ = 0;
    }
    const auto outcome = env_.step(*state_, rng_);
    ++episode_steps_;
    const bool cut = outcome.terminal || episode_steps_ >= max_episode_steps_;
    Transition tr;
    tr.x = features_(*state_);
    tr.x_next = features_(outcome.next);
    tr.reward = outcome.reward;
    tr.continue_discount = cut ? 0.0 : gamma_;
    if (cut) {
      state_.reset();
    } else {
      state_ = outcome.next;
    }
    return tr;
  }

 private:
  const Environment& env_;
  const FeatureMap& features_;
  double gamma_;
  std::mt19937_64 rng_;
  std::int64_t remaining_;
  std::int64_t max_episode_steps_;
  std::int64_t episode_steps_ = 0;
  std::optional<Vector> state_;
};

// ---------------------------------------------------------------------------
// Synthetic finite MDP with a closed-form system

/// Finite MDP under a fixed policy, with features per state. The exact
/// system matrices and the fixed point are computable in closed form, which
/// makes this the cross-algorithm oracle for the whole suite.
class SyntheticMdp {
 public:
  struct System {
    Matrix a;
    Vector b;
    Vector w_star;
  };

  SyntheticMdp(Matrix transition, Vector rewards, Matrix features, double gamma,
               double lambda)
      : p_(std::move(transition)),
        r_pi_(std::move(rewards)),
        x_(std::move(features)),
        gamma_(gamma),
        lambda_(lambda) {
    const Index n = p_.rows();
    if (p_.cols() != n || r_pi_.size() != n || x_.rows() != n) {
      throw std::invalid_argument("SyntheticMdp: inconsistent shapes");
    }
    for (Index i = 0; i < n; ++i) {
      if (std::abs(p_.row(i).sum() - 1.0) > 1e-10 || p_.row(i).minCoeff() < 0.0) {
        throw std::invalid_argument("SyntheticMdp: rows must be stochastic");
      }
    }
    stationary_ = solve_stationary(p_);
    if ((stationary_.transpose() * p_ - stationary_.transpose()).cwiseAbs().maxCoeff() >
        1e-10) {
      throw std::invalid_argument("SyntheticMdp: no reliable stationary distribution");
    }
    Matrix trace_op = Matrix::Identity(n, n) - gamma_ * lambda_ * p_;
    Eigen::FullPivLU<Matrix> lu(trace_op);
    if (!lu.isInvertible()) {
      throw std::invalid_argument("SyntheticMdp: (I - gamma*lambda*P) is singular");
    }
    feature_rows_.reserve(n);
    for (Index i = 0; i < n; ++i) {
      feature_rows_.push_back(FeatureVector::dense(x_.row(i).transpose()));
    }
  }

  Index num_states() const { return p_.rows(); }
  Index feature_dim() const { return x_.cols(); }
  double gamma() const { return gamma_; }
  double lambda() const { return lambda_; }
  const Matrix& transition_matrix() const { return p_; }
  const Vector& expected_rewards() const { return r_pi_; }
  const Matrix& feature_matrix() const { return x_; }
  const Vector& stationary_distribution() const { return stationary_; }

  const FeatureVector& features(Index state) const { return feature_rows_[state]; }

  /// Overrides the per-state feature vectors emitted on streams (e.g. sparse
  /// tile-coded rows); must agree with the dense feature matrix.
  void set_feature_rows(std::vector<FeatureVector> rows) {
    if (static_cast<Index>(rows.size()) != num_states()) {
      throw std::invalid_argument("SyntheticMdp: feature row count mismatch");
    }
    feature_rows_ = std::move(rows);
  }

  /// Closed-form A, b and fixed point w* = A^+ b.
  System true_system() const {
    const Index n = num_states();
    const Matrix trace_op = Matrix::Identity(n, n) - gamma_ * lambda_ * p_;
    const Matrix bellman_op = Matrix::Identity(n, n) - gamma_ * p_;
    const Eigen::PartialPivLU<Matrix> lu(trace_op);
    System sys;
    sys.a = x_.transpose() * stationary_.asDiagonal() * lu.solve(bellman_op * x_);
    sys.b = x_.transpose() * stationary_.asDiagonal() * lu.solve(r_pi_);
    sys.w_star = pseudo_solve(sys.a, sys.b);
    return sys;
  }

  /// Exact state values (I - gamma P)^-1 r.
  Vector true_values() const {
    const Index n = num_states();
    const Matrix bellman_op = Matrix::Identity(n, n) - gamma_ * p_;
    return Eigen::PartialPivLU<Matrix>(bellman_op).solve(r_pi_);
  }

 private:
  // pi^T P = pi^T with sum(pi) = 1, as one least-squares solve.
  static Vector solve_stationary(const Matrix& p) {
    const Index n = p.rows();
    Matrix lhs(n + 1, n);
    lhs.topRows(n) = p.transpose() - Matrix::Identity(n, n);
    lhs.bottomRows(1).setOnes();
    Vector rhs = Vector::Zero(n + 1);
    rhs(n) = 1.0;
    return lhs.colPivHouseholderQr().solve(rhs);
  }

  Matrix p_;
  Vector r_pi_;
  Matrix x_;
  double gamma_;
  double lambda_;
  Vector stationary_;
  std::vector<FeatureVector> feature_rows_;
};

/// Stationary-start chain sampler; rewards are the per-state expectations.
class MdpStream : public TransitionStream {
 public:
  MdpStream(const SyntheticMdp& mdp, std::uint64_t seed, std::int64_t length)
      : mdp_(mdp), rng_(seed), remaining_(length) {
    const Vector& pi = mdp_.stationary_distribution();
    std::discrete_distribution<int> start(pi.data(), pi.data() + pi.size());
    state_ = start(rng_);
  }

  std::optional<Transition> next() override {
    if (remaining_ <= 0) return std::nullopt;
    --remaining_;
    const Index n = mdp_.num_states();
    // Copy the row once; discrete_distribution needs contiguous data.
    Vector row = mdp_.transition_matrix().row(state_).transpose();
    std::discrete_distribution<int> jump(row.data(), row.data() + n);
    const Index next_state = jump(rng_);
    Transition tr;
    tr.x = mdp_.features(state_);
    tr.x_next = mdp_.features(next_state);
    tr.reward = mdp_.expected_rewards()(state_);
    tr.continue_discount = mdp_.gamma();
    state_ = next_state;
    return tr;
  }

 private:
  const SyntheticMdp& mdp_;
  std::mt19937_64 rng_;
  std::int64_t remaining_;
  Index state_ = 0;
};

/// Environment view of a synthetic MDP; the state is the state index. Lets
/// rollout estimators run against the closed-form values.
class SyntheticMdpEnv : public Environment {
 public:
  explicit SyntheticMdpEnv(const SyntheticMdp& mdp) : mdp_(mdp) {}

  Index state_dim() const override { return 1; }
  Vector state_lows() const override { return Vector::Zero(1); }
  Vector state_highs() const override {
    return Vector::Constant(1, static_cast<double>(mdp_.num_states() - 1));
  }

  Vector reset(std::mt19937_64& rng) const override {
    const Vector& pi = mdp_.stationary_distribution();
    std::discrete_distribution<int> start(pi.data(), pi.data() + pi.size());
    return Vector::Constant(1, static_cast<double>(start(rng)));
  }

  Outcome step(const Vector& state, std::mt19937_64& rng) const override {
    const auto s = static_cast<Index>(std::llround(state(0)));
    Vector row = mdp_.transition_matrix().row(s).transpose();
    std::discrete_distribution<int> jump(row.data(), row.data() + row.size());
    Outcome out;
    out.next = Vector::Constant(1, static_cast<double>(jump(rng)));
    out.reward = mdp_.expected_rewards()(s);
    out.terminal = false;
    return out;
  }

 private:
  const SyntheticMdp& mdp_;
};

/// Random ergodic MDP: Dirichlet-ish rows, uniform rewards, Gaussian features.
inline SyntheticMdp make_random_mdp(Index n_states, Index feature_dim, double gamma,
                                    double lambda, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  std::uniform_real_distribution<double> reward(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix p(n_states, n_states);
  for (Index i = 0; i < n_states; ++i) {
    for (Index j = 0; j < n_states; ++j) p(i, j) = unif(rng);
    p.row(i) /= p.row(i).sum();
  }
  Vector r(n_states);
  for (Index i = 0; i < n_states; ++i) r(i) = reward(rng);
  Matrix x(n_states, feature_dim);
  for (Index i = 0; i < n_states; ++i) {
    for (Index j = 0; j < feature_dim; ++j) x(i, j) = gauss(rng);
  }
  return SyntheticMdp(std::move(p), std::move(r), std::move(x), gamma, lambda);
}

/// High-dimensional scaling stand-in: a reflecting random walk on [0, 1]
/// with tile-coded states. Feature rows are sparse on streams.
inline SyntheticMdp make_random_walk_mdp(Index n_states, const TileCoding& tiles,
                                         double gamma, double lambda,
                                         double p_stay = 0.2) {
  Matrix p = Matrix::Zero(n_states, n_states);
  const double p_move = (1.0 - p_stay) / 2.0;
  for (Index i = 0; i < n_states; ++i) {
    p(i, i) += p_stay;
    p(i, std::min(i + 1, n_states - 1)) += p_move;
    p(i, std::max<Index>(i - 1, 0)) += p_move;
  }
  Vector r(n_states);
  std::vector<FeatureVector> rows;
  rows.reserve(n_states);
  Matrix x(n_states, tiles.dim());
  for (Index i = 0; i < n_states; ++i) {
    const double pos = n_states == 1 ? 0.5
                                     : static_cast<double>(i) / (n_states - 1);
    r(i) = std::sin(2.0 * std::numbers::pi * pos);
    FeatureVector fv = tiles((Vector(1) << pos).finished());
    x.row(i) = fv.to_dense().transpose();
    rows.push_back(std::move(fv));
  }
  SyntheticMdp mdp(std::move(p), std::move(r), std::move(x), gamma, lambda);
  mdp.set_feature_rows(std::move(rows));
  return mdp;
}

/// Random MDP whose system satisfies the discrete Picard condition with the
/// given exponent: the reward vector is back-solved so that the spectral
/// coefficients of b decay as margin * sigma_i^p over the nonzero spectrum.
inline SyntheticMdp make_picard_mdp(Index n_states, double gamma, double p,
                                    std::uint64_t seed, double margin = 0.9) {
  const SyntheticMdp base = make_random_mdp(n_states, n_states, gamma, 0.0, seed);
  const auto sys = base.true_system();
  Eigen::BDCSVD<Matrix> svd(sys.a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sig = svd.singularValues();
  const double cut = 1e-12 * sig(0);
  Vector target = Vector::Zero(n_states);
  for (Index i = 0; i < sig.size() && sig(i) > cut; ++i) {
    target += margin * std::pow(sig(i), p) * svd.matrixU().col(i);
  }
  // b = X^T D r for lambda = 0, so the rewards follow by a min-norm solve.
  const Matrix lhs = base.feature_matrix().transpose() *
                     Matrix(base.stationary_distribution().asDiagonal());
  const Vector rewards =
      lhs.completeOrthogonalDecomposition().solve(target);
  return SyntheticMdp(base.transition_matrix(), rewards, base.feature_matrix(),
                      gamma, 0.0);
}

/// Materializes up to n transitions; stream generation is usually excluded
/// from runtime metering, so callers pre-collect.
inline std::vector<Transition> collect(TransitionStream& stream, std::int64_t n) {
  std::vector<Transition> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    auto tr = stream.next();
    if (!tr) break;
    out.push_back(std::move(*tr));
  }
  return out;
}

}  // namespace tlstd
