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

#include "tlstd/features.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

namespace tlstd {
namespace {

TileCodingConfig mountain_car_tiles(int layers = 10) {
  TileCodingConfig cfg;
  cfg.state_lows = (Vector(2) << -1.2, -0.07).finished();
  cfg.state_highs = (Vector(2) << 0.5, 0.07).finished();
  cfg.tiles_per_dim = {10, 10};
  cfg.num_layers = layers;
  return cfg;
}

TEST(FeatureVector, SparseAndDenseDotAgree) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Index d = 37;
    std::vector<FeatureVector::Entry> entries;
    Vector dense = Vector::Zero(d);
    std::uniform_int_distribution<Index> pick(0, d - 1);
    std::set<Index> used;
    for (int i = 0; i < 9; ++i) {
      Index idx = pick(rng);
      if (!used.insert(idx).second) continue;
      const double val = gauss(rng);
      entries.emplace_back(idx, val);
      dense(idx) = val;
    }
    const FeatureVector sparse = FeatureVector::sparse(d, entries);
    const FeatureVector as_dense = FeatureVector::dense(dense);
    Vector w(d);
    for (Index i = 0; i < d; ++i) w(i) = gauss(rng);
    EXPECT_NEAR(sparse.dot(w), as_dense.dot(w), 1e-12);
    EXPECT_TRUE(sparse.to_dense().isApprox(dense, 1e-15));
  }
}

TEST(FeatureVector, RejectsBadSparseInput) {
  EXPECT_THROW(FeatureVector::sparse(4, {{4, 1.0}}), std::invalid_argument);
  EXPECT_THROW(FeatureVector::sparse(4, {{-1, 1.0}}), std::invalid_argument);
  EXPECT_THROW(FeatureVector::sparse(4, {{2, 1.0}, {2, 0.5}}), std::invalid_argument);
}

TEST(TileCoding, SingleLayerCellArithmetic) {
  TileCodingConfig cfg;
  cfg.state_lows = Vector::Zero(2);
  cfg.state_highs = Vector::Ones(2);
  cfg.tiles_per_dim = {2, 2};
  cfg.num_layers = 1;
  cfg.layer_offsets = {Vector::Zero(2)};
  TileCoding tiles(cfg);
  const FeatureVector fv = tiles((Vector(2) << 0.25, 0.25).finished());
  ASSERT_EQ(fv.entries().size(), 1u);
  EXPECT_EQ(fv.entries()[0].first, 0);
  EXPECT_EQ(fv.entries()[0].second, 1.0);
}

TEST(TileCoding, InteriorBoundaryBelongsToHigherCell) {
  TileCodingConfig cfg;
  cfg.state_lows = Vector::Zero(1);
  cfg.state_highs = Vector::Ones(1);
  cfg.tiles_per_dim = {2};
  cfg.num_layers = 1;
  cfg.layer_offsets = {Vector::Zero(1)};
  TileCoding tiles(cfg);
  EXPECT_EQ(tiles((Vector(1) << 0.5).finished()).entries()[0].first, 1);
  EXPECT_EQ(tiles((Vector(1) << 0.4999999).finished()).entries()[0].first, 0);
}

TEST(TileCoding, MountainCarLayoutHasExactSparsity) {
  TileCoding tiles(mountain_car_tiles());
  EXPECT_EQ(tiles.dim(), 1000);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> pos(-1.2, 0.5);
  std::uniform_real_distribution<double> vel(-0.07, 0.07);
  for (int i = 0; i < 500; ++i) {
    const FeatureVector fv = tiles((Vector(2) << pos(rng), vel(rng)).finished());
    ASSERT_EQ(fv.active_count(), 10);
    for (const auto& [idx, val] : fv.entries()) {
      EXPECT_GE(idx, 0);
      EXPECT_LT(idx, 1000);
      EXPECT_EQ(val, 1.0);
    }
  }
}

TEST(TileCoding, UpperCornerClampsToLastCells) {
  TileCoding tiles(mountain_car_tiles());
  const FeatureVector fv = tiles((Vector(2) << 0.5, 0.07).finished());
  ASSERT_EQ(fv.active_count(), 10);
  for (int layer = 0; layer < 10; ++layer) {
    EXPECT_EQ(fv.entries()[layer].first, layer * 100 + 99);
  }
}

TEST(TileCoding, OutOfRangeStatesAreClamped) {
  TileCoding tiles(mountain_car_tiles());
  const FeatureVector below = tiles((Vector(2) << -9.0, -1.0).finished());
  const FeatureVector at_low =
      tiles((Vector(2) << -1.2, -0.07).finished());
  ASSERT_EQ(below.entries().size(), at_low.entries().size());
  for (std::size_t i = 0; i < below.entries().size(); ++i) {
    EXPECT_EQ(below.entries()[i].first, at_low.entries()[i].first);
  }
}

TEST(TileCoding, DeterministicAcrossInstances) {
  TileCoding a(mountain_car_tiles());
  TileCoding b(mountain_car_tiles());
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> pos(-1.2, 0.5);
  std::uniform_real_distribution<double> vel(-0.07, 0.07);
  for (int i = 0; i < 200; ++i) {
    const Vector s = (Vector(2) << pos(rng), vel(rng)).finished();
    const auto ea = a(s).entries();
    const auto eb = b(s).entries();
    ASSERT_EQ(ea.size(), eb.size());
    for (std::size_t j = 0; j < ea.size(); ++j) EXPECT_EQ(ea[j].first, eb[j].first);
  }
  TileCodingConfig seeded = mountain_car_tiles();
  seeded.offsets_seed = 99;
  TileCoding c(seeded), d(seeded);
  const Vector s = (Vector(2) << -0.3, 0.01).finished();
  EXPECT_EQ(c(s).entries()[0].first, d(s).entries()[0].first);
}

TEST(TileCoding, BiasUnitIsLastIndex) {
  TileCodingConfig cfg = mountain_car_tiles(4);
  cfg.include_bias = true;
  TileCoding tiles(cfg);
  EXPECT_EQ(tiles.dim(), 401);
  const FeatureVector fv = tiles((Vector(2) << -0.5, 0.0).finished());
  EXPECT_EQ(fv.active_count(), 5);
  EXPECT_EQ(fv.entries().back().first, 400);
}

RbfGridConfig unit_rbf(int per_dim, double width) {
  RbfGridConfig cfg;
  cfg.state_lows = Vector::Zero(2);
  cfg.state_highs = Vector::Ones(2);
  cfg.centers_per_dim = {per_dim, per_dim};
  cfg.width_fraction = width;
  return cfg;
}

TEST(RbfGrid, CenterEvaluatesToOne) {
  RbfGrid rbf(unit_rbf(4, 0.12));
  // Grid centers include the bounds: first center is the origin.
  const FeatureVector fv = rbf(Vector::Zero(2));
  EXPECT_NEAR(fv.to_dense()(0), 1.0, 1e-15);
}

TEST(RbfGrid, KernelValueAtOneSigma) {
  RbfGridConfig cfg;
  cfg.state_lows = Vector::Zero(1);
  cfg.state_highs = Vector::Ones(1);
  cfg.centers_per_dim = {1};  // single center at the midpoint
  cfg.width_fraction = 0.12;
  RbfGrid rbf(cfg);
  const FeatureVector fv = rbf((Vector(1) << 0.5 + 0.12).finished());
  EXPECT_NEAR(fv.to_dense()(0), std::exp(-0.5), 1e-12);
}

TEST(RbfGrid, PaperSizedGrid) {
  RbfGrid rbf(unit_rbf(32, 0.12));
  EXPECT_EQ(rbf.dim(), 1024);
  const FeatureVector fv = rbf((Vector(2) << 0.3, 0.7).finished());
  const Vector dense = fv.to_dense();
  for (Index i = 0; i < dense.size(); ++i) {
    EXPECT_GT(dense(i), 0.0);
    EXPECT_LE(dense(i), 1.0);
  }
}

TEST(RbfGrid, ContinuousInState) {
  RbfGrid rbf(unit_rbf(8, 0.2));
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  const double h = 1e-6;
  for (int i = 0; i < 50; ++i) {
    const Vector s = (Vector(2) << unif(rng), unif(rng)).finished();
    Vector bumped = s;
    bumped(0) += h;
    const double gap = (rbf(bumped).to_dense() - rbf(s).to_dense()).norm();
    EXPECT_LE(gap, 100.0 * h);
  }
}

}  // namespace
}  // namespace tlstd
