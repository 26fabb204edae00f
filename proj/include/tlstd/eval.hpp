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
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tlstd/envs.hpp"
#include "tlstd/features.hpp"
#include "tlstd/linalg.hpp"

namespace tlstd {

// ---------------------------------------------------------------------------
// Ground truth by Monte-Carlo rollouts

struct RolloutSpec {
  int n_rollouts = 1;
  int horizon = 2000;
  double gamma = 0.99;
  std::uint64_t seed = 0;
};

/// Average discounted return of the environment's fixed policy from one
/// start state.
inline double discounted_return(const Environment& env, const Vector& start,
                                const RolloutSpec& spec, std::mt19937_64& rng) {
  double total = 0.0;
  for (int rollout = 0; rollout < spec.n_rollouts; ++rollout) {
    Vector state = start;
    double value = 0.0;
    double discount = 1.0;
    for (int t = 0; t < spec.horizon; ++t) {
      const auto outcome = env.step(state, rng);
      value += discount * outcome.reward;
      if (outcome.terminal) break;
      discount *= spec.gamma;
      state = outcome.next;
    }
    total += value;
  }
  return total / spec.n_rollouts;
}

inline Vector rollout_values(const Environment& env,
                             const std::vector<Vector>& eval_states,
                             const RolloutSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  Vector values(static_cast<Index>(eval_states.size()));
  for (std::size_t i = 0; i < eval_states.size(); ++i) {
    values(static_cast<Index>(i)) = discounted_return(env, eval_states[i], spec, rng);
  }
  return values;
}

/// Uniform grid over the state box, points_per_dim per dimension, bounds
/// included.
inline std::vector<Vector> uniform_grid(const Vector& lows, const Vector& highs,
                                        const std::vector<int>& points_per_dim) {
  const auto dims = static_cast<Index>(points_per_dim.size());
  std::vector<Vector> out;
  Index total = 1;
  for (int p : points_per_dim) total *= p;
  out.reserve(total);
  std::vector<Index> digits(dims, 0);
  for (Index i = 0; i < total; ++i) {
    Vector s(dims);
    for (Index dd = 0; dd < dims; ++dd) {
      const int n = points_per_dim[dd];
      const double frac = n == 1 ? 0.5 : static_cast<double>(digits[dd]) / (n - 1);
      s(dd) = lows(dd) + frac * (highs(dd) - lows(dd));
    }
    out.push_back(std::move(s));
    for (Index dd = dims; dd-- > 0;) {
      if (++digits[dd] < points_per_dim[dd]) break;
      digits[dd] = 0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Error metrics

inline double rmse(const Vector& weights, const FeatureMap& features,
                   const std::vector<Vector>& eval_states, const Vector& true_values) {
  double acc = 0.0;
  for (std::size_t i = 0; i < eval_states.size(); ++i) {
    const double estimate = features(eval_states[i]).dot(weights);
    const double err = estimate - true_values(static_cast<Index>(i));
    acc += err * err;
  }
  return std::sqrt(acc / static_cast<double>(eval_states.size()));
}

// ---------------------------------------------------------------------------
// Singular spectrum analysis

/// Smallest k whose leading singular values carry at least mass_fraction of
/// the total weight. All-zero spectra count 0.
inline Index spectrum_count(const Vector& sigma, double mass_fraction = 0.95) {
  const double total = sigma.sum();
  if (total <= 0.0) return 0;
  double acc = 0.0;
  for (Index k = 0; k < sigma.size(); ++k) {
    acc += sigma(k);
    if (acc / total >= mass_fraction) return k + 1;
  }
  return sigma.size();
}

// ---------------------------------------------------------------------------
// Discrete Picard condition

struct PicardProfile {
  Vector sigma;       // sorted non-increasing
  Vector proj;        // |u_i^T b|
  double p_fit = 0.0; // largest p with proj_i <= sigma_i^p at every kept index
  Index considered = 0;

  /// First index violating proj_i <= sigma_i^p among the kept indices, if any.
  std::optional<Index> first_violation(double p) const {
    for (Index i = 0; i < considered; ++i) {
      if (proj(i) > std::pow(sigma(i), p)) return i;
    }
    return std::nullopt;
  }
};

/// Decay profile of the spectral coefficients of b against the singular
/// values of A. Indices with sigma_i <= 1e-12 sigma_1 are excluded from the
/// fit. p_fit may come out below 1 when the condition fails for every useful
/// exponent; callers needing a valid exponent floor it.
inline PicardProfile picard_profile(const Matrix& a, const Vector& b) {
  if (a.rows() != a.cols() || b.size() != a.rows()) {
    throw std::invalid_argument("picard_profile: A must be square and match b");
  }
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  PicardProfile profile;
  profile.sigma = svd.singularValues();
  profile.proj = (svd.matrixU().transpose() * b).cwiseAbs();

  const double cutoff =
      profile.sigma.size() > 0 ? 1e-12 * profile.sigma(0) : 0.0;
  Index considered = 0;
  while (considered < profile.sigma.size() && profile.sigma(considered) > cutoff) {
    ++considered;
  }
  profile.considered = considered;

  constexpr double kMaxP = 16.0;
  double upper = kMaxP;
  double lower = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < considered; ++i) {
    const double s = profile.sigma(i);
    const double g = profile.proj(i);
    if (g <= 0.0) continue;
    if (s < 1.0) {
      upper = std::min(upper, std::log(g) / std::log(s));
    } else if (s > 1.0) {
      lower = std::max(lower, std::log(g) / std::log(s));
    } else if (g > 1.0) {
      upper = -std::numeric_limits<double>::infinity();
    }
  }
  profile.p_fit = upper >= lower ? upper
                                 : std::numeric_limits<double>::quiet_NaN();
  return profile;
}

// ---------------------------------------------------------------------------
// Bias-variance bound of the rank-r solution

struct BoundReport {
  double sample_term = 0.0;   // ||b_t - A_t w*|| / sigma_hat_r
  double epsilon_value = 0.0; // epsilon(t), clamped to be nonnegative
  double epsilon_term = 0.0;  // (d - r) * epsilon(t)
  double bias_term = 0.0;     // (d - r) * sigma_r^{p-1}
  double total = 0.0;
};

/// Evaluates the three right-hand-side terms bounding ||w_{t,r} - w*||_2 for
/// the rank-r truncated solve of the sampled system (A_t, b_t) against the
/// true system (A, b) under a Picard exponent p.
///
/// Singular vectors of A_t are matched to those of A in index order with the
/// sign chosen to maximize v_hat_j . v_j; a worse-than-ideal matching only
/// enlarges the bound, and the matching-free arm of epsilon(t) is reported
/// through the min either way.
inline BoundReport theorem_bound(const Matrix& a, const Vector& b, const Matrix& a_t,
                                 const Vector& b_t, Index r, double p) {
  const Index d = a.rows();
  if (a.cols() != d || a_t.rows() != d || a_t.cols() != d || b.size() != d ||
      b_t.size() != d) {
    throw std::invalid_argument("theorem_bound: shape mismatch");
  }
  if (r < 1 || r > d) throw std::invalid_argument("theorem_bound: need 1 <= r <= d");

  Eigen::BDCSVD<Matrix> true_svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::BDCSVD<Matrix> sample_svd(a_t, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sig = true_svd.singularValues();
  const Vector& sig_hat = sample_svd.singularValues();

  const double rank_cut = sig.size() > 0 ? 1e-12 * sig(0) : 0.0;
  Index rank = 0;
  while (rank < d && sig(rank) > rank_cut) ++rank;

  const Vector w_star = pseudo_solve(a, b);

  BoundReport report;
  const double sigma_hat_r = sig_hat(r - 1);
  if (sigma_hat_r <= 0.0) {
    report.sample_term = std::numeric_limits<double>::infinity();
    report.total = std::numeric_limits<double>::infinity();
    return report;
  }
  report.sample_term = (b_t - a_t * w_star).norm() / sigma_hat_r;

  const double sigma_r = sig(r - 1);
  const double pm1 = p - 1.0;
  report.bias_term = static_cast<double>(d - r) * std::pow(sigma_r, pm1);

  const double arm_free = static_cast<double>(rank) * std::pow(sig(0), pm1);
  double arm_matched = std::pow(sigma_hat_r, pm1) - std::pow(sigma_r, pm1);
  for (Index j = 0; j < rank; ++j) {
    Vector v_hat = sample_svd.matrixV().col(j);
    if (v_hat.dot(true_svd.matrixV().col(j)) < 0.0) v_hat = -v_hat;
    arm_matched += (true_svd.matrixV().col(j) * std::pow(sig(j), pm1) -
                    v_hat * std::pow(sig_hat(j), pm1))
                       .norm();
  }
  report.epsilon_value = std::max(0.0, std::min(arm_free, arm_matched));
  report.epsilon_term = static_cast<double>(d - r) * report.epsilon_value;
  report.total = report.sample_term + report.epsilon_term + report.bias_term;
  return report;
}

/// Rank-r truncated pseudo-inverse solve of a sampled system, the quantity
/// the bound above controls.
inline Vector truncated_rank_solve(const Matrix& a_t, const Vector& b_t, Index r) {
  Eigen::BDCSVD<Matrix> svd(a_t, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sig = svd.singularValues();
  Vector coeffs = svd.matrixU().transpose() * b_t;
  const Index keep = std::min(r, sig.size());
  for (Index i = 0; i < sig.size(); ++i) {
    coeffs(i) = (i < keep && sig(i) > 0.0) ? coeffs(i) / sig(i) : 0.0;
  }
  return svd.matrixV() * coeffs;
}

// ---------------------------------------------------------------------------
// Experiment reports

struct Checkpoint {
  std::int64_t samples = 0;
  double seconds = 0.0;
  double rmse = 0.0;
};

/// Per-run measurement record; one CSV row per checkpoint with columns
/// (algo, seed, samples, seconds, rmse, r, lambda, extra).
struct EvalReport {
  std::string algorithm;
  std::uint64_t seed = 0;
  Index rank = 0;
  double lambda = 0.0;
  std::string extra;  // semicolon-separated key=value pairs
  std::vector<Checkpoint> checkpoints;
};

}  // namespace tlstd
