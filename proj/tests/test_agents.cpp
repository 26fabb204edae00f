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

#include "tlstd/agents.hpp"

#include <gtest/gtest.h>

#include <random>

#include "tlstd/envs.hpp"
#include "tlstd/linalg.hpp"

namespace tlstd {
namespace {

Transition dense_transition(const Vector& x, const Vector& x_next, double reward,
                            double continue_discount) {
  Transition tr;
  tr.x = FeatureVector::dense(x);
  tr.x_next = FeatureVector::dense(x_next);
  tr.reward = reward;
  tr.continue_discount = continue_discount;
  return tr;
}

std::vector<Transition> random_stream(Index d, int length, double gamma,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Transition> out;
  Vector x(d);
  for (Index i = 0; i < d; ++i) x(i) = gauss(rng);
  for (int t = 0; t < length; ++t) {
    Vector x_next(d);
    for (Index i = 0; i < d; ++i) x_next(i) = gauss(rng);
    const bool terminal = unif(rng) < 0.02;
    out.push_back(dense_transition(x, x_next, gauss(rng), terminal ? 0.0 : gamma));
    x = x_next;
  }
  return out;
}

TEST(EligibilityTrace, MatchesGeometricSum) {
  const Index d = 4;
  const double gamma = 0.9, lambda = 0.7;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  EligibilityTrace trace(d, lambda);
  std::vector<Vector> xs;
  for (int t = 0; t < 12; ++t) {
    Vector x(d);
    for (Index i = 0; i < d; ++i) x(i) = gauss(rng);
    xs.push_back(x);
    trace.advance(dense_transition(x, Vector::Zero(d), 0.0, gamma));
  }
  Vector expected = Vector::Zero(d);
  for (int i = 0; i < 12; ++i) {
    expected += std::pow(gamma * lambda, 11 - i) * xs[i];
  }
  EXPECT_LE(relative_error(trace.value(), expected), 1e-10);
}

TEST(EligibilityTrace, ResetsOnFirstStepAfterTerminal) {
  const Index d = 2;
  EligibilityTrace trace(d, 1.0);
  const Vector e0 = (Vector(2) << 1.0, 0.0).finished();
  const Vector e1 = (Vector(2) << 0.0, 1.0).finished();
  trace.advance(dense_transition(e0, e1, 0.0, 0.9));
  // Terminal transition: still accumulates, carrying the old episode.
  trace.advance(dense_transition(e1, e0, 0.0, 0.0));
  EXPECT_NEAR(trace.value()(0), 0.9, 1e-15);
  EXPECT_NEAR(trace.value()(1), 1.0, 1e-15);
  // First step of the next episode starts a fresh trace.
  trace.advance(dense_transition(e0, e1, 0.0, 0.9));
  EXPECT_NEAR(trace.value()(0), 1.0, 1e-15);
  EXPECT_NEAR(trace.value()(1), 0.0, 1e-15);
}

TEST(TlstdAgent, SingleFeatureFixedPoint) {
  TlstdAgent agent(1, 1, 1, 0.0);
  for (int t = 0; t < 10; ++t) {
    const Vector w = agent.step(
        dense_transition(Vector::Ones(1), Vector::Zero(1), 1.0, 0.0));
    EXPECT_NEAR(w(0), 1.0, 1e-12);
  }
}

// Full-rank per-sample operation against the dense running-average oracle.
TEST(TlstdAgent, MatchesDenseLstdOracleAtFullRank) {
  const Index d = 6;
  const auto stream = random_stream(d, 300, 0.9, 11);
  TlstdAgent agent(d, d, 1, 0.3, BetaSchedule::running_average(), /*rel_cutoff=*/0.0);
  EligibilityTrace trace(d, 0.3);
  Matrix a_avg = Matrix::Zero(d, d);
  Vector b_avg = Vector::Zero(d);
  int t = 0;
  for (const auto& tr : stream) {
    const Vector w = agent.step(tr);
    const Vector& z = trace.advance(tr);
    const Vector diff =
        tr.x.to_dense() - tr.continue_discount * tr.x_next.to_dense();
    ++t;
    a_avg += (z * diff.transpose() - a_avg) / t;
    b_avg += (tr.reward * z - b_avg) / t;
    if (t >= 3 * d) {
      EXPECT_LE(relative_error(w, pseudo_solve(a_avg, b_avg)), 1e-6) << "at t=" << t;
    }
  }
}

TEST(TlstdAgent, RepresentedMatrixIsRunningAverage) {
  const Index d = 6;
  const auto stream = random_stream(d, 99, 0.9, 13);
  for (Index k : {Index{1}, Index{3}}) {
    TlstdAgent agent(d, d, k, 0.2);
    EligibilityTrace trace(d, 0.2);
    Matrix a_sum = Matrix::Zero(d, d);
    int t = 0;
    for (const auto& tr : stream) {
      agent.step(tr);
      const Vector& z = trace.advance(tr);
      a_sum += z * (tr.x.to_dense() - tr.continue_discount * tr.x_next.to_dense())
                       .transpose();
      ++t;
      if (t % k == 0) {
        EXPECT_LE(relative_frobenius_error(agent.factorization().reconstruct(),
                                           a_sum / t),
                  1e-6)
            << "k=" << k << " t=" << t;
      }
    }
  }
}

TEST(TlstdAgent, ConvergesOnSyntheticMdp) {
  const SyntheticMdp mdp = make_random_mdp(5, 8, 0.9, 0.0, 21);
  const auto sys = mdp.true_system();
  const Index rank = 5;  // rank(A) = number of states here
  TlstdAgent agent(8, rank, 1, 0.0);
  MdpStream stream(mdp, 77, 100000);
  Vector w;
  while (auto tr = stream.next()) w = agent.step(*tr);
  EXPECT_LE(relative_error(w, sys.w_star), 0.05);
}

TEST(TlstdAgent, ConstantBetaTracksRegimeChange) {
  const Index d = 2;
  TlstdAgent mixed(d, d, 1, 0.0, BetaSchedule::constant(0.05));
  TlstdAgent fresh(d, d, 1, 0.0, BetaSchedule::constant(0.05));
  const Vector e0 = (Vector(2) << 1.0, 0.0).finished();
  const Vector e1 = (Vector(2) << 0.0, 1.0).finished();
  for (int t = 0; t < 300; ++t) {
    mixed.step(dense_transition(e0, Vector::Zero(d), 2.0, 0.0));
  }
  Vector w_mixed, w_fresh;
  for (int t = 0; t < 500; ++t) {
    const auto tr = dense_transition(e1, Vector::Zero(d), -1.0, 0.0);
    w_mixed = mixed.step(tr);
    w_fresh = fresh.step(tr);
  }
  EXPECT_LE((w_mixed - w_fresh).norm(), 1e-6);
}

TEST(TlstdAgent, RejectsFeatureLengthMismatch) {
  TlstdAgent agent(4, 2, 1, 0.0);
  EXPECT_THROW(
      agent.step(dense_transition(Vector::Ones(3), Vector::Ones(3), 0.0, 0.9)),
      std::invalid_argument);
}

TEST(TdAgent, SingleStepUpdate) {
  TdAgent agent(3, 0.0, 0.5);
  const Vector w = agent.step(dense_transition(
      (Vector(3) << 1.0, 0.0, 0.0).finished(), Vector::Zero(3), 1.0, 0.0));
  EXPECT_NEAR(w(0), 0.5, 1e-15);
  EXPECT_NEAR(w(1), 0.0, 1e-15);
}

TEST(TdAgent, ZeroErrorStreamIsFixedPoint) {
  TdAgent agent(2, 0.5, 0.1);
  // reward + gamma x'^T w - x^T w = 0 for w = 0 and zero rewards.
  for (int t = 0; t < 20; ++t) {
    const Vector w = agent.step(dense_transition(
        (Vector(2) << 1.0, 1.0).finished(), (Vector(2) << 1.0, 0.0).finished(),
        0.0, 0.9));
    EXPECT_TRUE(w.isZero(0.0));
  }
}

TEST(TdAgent, ConvergesOnSyntheticMdp) {
  const SyntheticMdp mdp = make_random_mdp(5, 5, 0.9, 0.0, 33);
  const auto sys = mdp.true_system();
  TdAgent agent(5, 0.0, 0.02, /*decay_alpha=*/true, /*n0=*/10000.0);
  MdpStream stream(mdp, 5, 1000000);
  Vector w;
  while (auto tr = stream.next()) w = agent.step(*tr);
  EXPECT_LE(relative_error(w, sys.w_star), 0.1);
}

TEST(LstdAgent, ScalarRidgeAccounting) {
  LstdAgent agent(1, 0.0, /*delta_init=*/1.0);
  const Vector w =
      agent.step(dense_transition(Vector::Ones(1), Vector::Zero(1), 1.0, 0.0));
  // (delta + z d)^-1 b = 1/2 here.
  EXPECT_NEAR(w(0), 0.5, 1e-12);

  LstdAgent tiny_ridge(1, 0.0, 1e-10);
  const Vector w2 =
      tiny_ridge.step(dense_transition(Vector::Ones(1), Vector::Zero(1), 1.0, 0.0));
  EXPECT_NEAR(w2(0), 1.0, 1e-9);
}

TEST(LstdAgent, EmptyStreamYieldsZero) {
  LstdAgent agent(4, 0.3);
  EXPECT_TRUE(agent.weights().isZero(0.0));
}

TEST(LstdAgent, MatchesExplicitAccumulationOracle) {
  const Index d = 5;
  const double delta = 1e-3;
  const auto stream = random_stream(d, 100, 0.95, 19);
  LstdAgent agent(d, 0.5, delta);
  EligibilityTrace trace(d, 0.5);
  Matrix a_acc = delta * Matrix::Identity(d, d);
  Vector b_acc = Vector::Zero(d);
  Vector w;
  for (const auto& tr : stream) {
    w = agent.step(tr);
    const Vector& z = trace.advance(tr);
    a_acc += z * (tr.x.to_dense() - tr.continue_discount * tr.x_next.to_dense())
                     .transpose();
    b_acc += tr.reward * z;
    EXPECT_LE(relative_error(w, Vector(a_acc.partialPivLu().solve(b_acc))), 1e-8);
  }
  EXPECT_EQ(agent.skipped_updates(), 0);
}

TEST(LstdAgent, AgreesWithTlstdAtFullRank) {
  const Index d = 6;
  const auto stream = random_stream(d, 400, 0.9, 23);
  LstdAgent lstd(d, 0.0, 1e-9);
  TlstdAgent tlstd(d, d, 1, 0.0, BetaSchedule::running_average(), 0.0);
  int t = 0;
  for (const auto& tr : stream) {
    const Vector w_lstd = lstd.step(tr);
    const Vector w_tlstd = tlstd.step(tr);
    if (++t >= 5 * d) {
      EXPECT_LE(relative_error(w_tlstd, w_lstd), 1e-5) << "t=" << t;
    }
  }
}

TEST(IlstdAgent, ZeroResidualLeavesWeightsUnchanged) {
  IlstdAgent agent(3, 0.0, /*m=*/3, /*alpha0=*/1.0, /*n0=*/0.0);
  // A zero-reward self-loop with identical features gives mu = 0 throughout.
  const Vector x = (Vector(3) << 1.0, 2.0, 0.0).finished();
  for (int t = 0; t < 5; ++t) {
    const Vector w = agent.step(dense_transition(x, x, 0.0, 0.0));
    EXPECT_TRUE(w.isZero(0.0));
  }
  EXPECT_TRUE(agent.residual().isZero(0.0));
}

TEST(IlstdAgent, ResidualMatchesBruteForceRecomputation) {
  const Index d = 5;
  const auto stream = random_stream(d, 200, 0.9, 29);
  IlstdAgent agent(d, 0.4, 2, 0.005, 100.0);
  for (const auto& tr : stream) {
    agent.step(tr);
    const Vector brute = agent.system_rhs() - agent.system_matrix() * agent.weights();
    EXPECT_LE((agent.residual() - brute).norm(), 1e-8);
  }
}

TEST(IlstdAgent, IdentitySystemSolvesExactly) {
  IlstdAgent agent(2, 0.0, /*m=*/2, /*alpha0=*/1.0, /*n0=*/0.0);
  const Vector e0 = (Vector(2) << 1.0, 0.0).finished();
  const Vector e1 = (Vector(2) << 0.0, 1.0).finished();
  agent.step(dense_transition(e0, Vector::Zero(2), 2.0, 0.0));
  const Vector w = agent.step(dense_transition(e1, Vector::Zero(2), -3.0, 0.0));
  // Accumulated system is A = I, b = (2, -3); with alpha = 1 the sweep lands
  // exactly on b.
  EXPECT_DOUBLE_EQ(w(0), 2.0);
  EXPECT_DOUBLE_EQ(w(1), -3.0);
  EXPECT_TRUE(agent.residual().isZero(1e-15));
}

TEST(MakeAgent, DispatchesAndValidates) {
  AgentConfig cfg;
  cfg.algorithm = "tlstd";
  cfg.dim = 8;
  cfg.rank = 4;
  EXPECT_NE(make_agent(cfg), nullptr);
  cfg.algorithm = "lstd";
  EXPECT_NE(make_agent(cfg), nullptr);
  cfg.algorithm = "td";
  EXPECT_NE(make_agent(cfg), nullptr);
  cfg.algorithm = "ilstd";
  EXPECT_NE(make_agent(cfg), nullptr);
  cfg.algorithm = "unknown";
  EXPECT_THROW(make_agent(cfg), std::invalid_argument);
  cfg.algorithm = "tlstd";
  cfg.rank = 9;  // rank > dim
  EXPECT_THROW(make_agent(cfg), std::invalid_argument);
}

}  // namespace
}  // namespace tlstd
