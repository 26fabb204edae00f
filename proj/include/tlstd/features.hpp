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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tlstd/linalg.hpp"

namespace tlstd {

/// Real vector of fixed length d, stored either dense or as sorted unique
/// (index, value) pairs. Both forms represent the same vector.
class FeatureVector {
 public:
  using Entry = std::pair<Index, double>;

  FeatureVector() = default;

  static FeatureVector dense(Vector values) {
    FeatureVector fv;
    fv.dim_ = values.size();
    fv.dense_ = std::move(values);
    fv.is_sparse_ = false;
    return fv;
  }

  static FeatureVector sparse(Index dim, std::vector<Entry> entries) {
    FeatureVector fv;
    fv.dim_ = dim;
    fv.entries_ = std::move(entries);
    fv.is_sparse_ = true;
    std::sort(fv.entries_.begin(), fv.entries_.end());
    for (std::size_t i = 0; i < fv.entries_.size(); ++i) {
      const auto& [idx, val] = fv.entries_[i];
      (void)val;
      if (idx < 0 || idx >= dim) {
        throw std::invalid_argument("FeatureVector::sparse: index out of range");
      }
      if (i > 0 && fv.entries_[i - 1].first == idx) {
        throw std::invalid_argument("FeatureVector::sparse: duplicate index");
      }
    }
    return fv;
  }

  Index dim() const { return dim_; }
  bool is_sparse() const { return is_sparse_; }
  const std::vector<Entry>& entries() const { return entries_; }

  double dot(const Vector& w) const {
    if (!is_sparse_) return dense_.dot(w);
    double acc = 0.0;
    for (const auto& [idx, val] : entries_) acc += val * w(idx);
    return acc;
  }

  /// acc += scale * x
  void add_to(Vector& acc, double scale = 1.0) const {
    if (!is_sparse_) {
      acc += scale * dense_;
      return;
    }
    for (const auto& [idx, val] : entries_) acc(idx) += scale * val;
  }

  Vector to_dense() const {
    if (!is_sparse_) return dense_;
    Vector out = Vector::Zero(dim_);
    for (const auto& [idx, val] : entries_) out(idx) = val;
    return out;
  }

  Index active_count() const {
    return is_sparse_ ? static_cast<Index>(entries_.size()) : dim_;
  }

 private:
  Index dim_ = 0;
  bool is_sparse_ = false;
  Vector dense_;
  std::vector<Entry> entries_;
};

/// Deterministic map from a continuous state to its feature vector.
class FeatureMap {
 public:
  virtual ~FeatureMap() = default;
  virtual Index dim() const = 0;
  virtual FeatureVector operator()(const Vector& state) const = 0;
};

struct TileCodingConfig {
  Vector state_lows;
  Vector state_highs;
  std::vector<int> tiles_per_dim;
  int num_layers = 1;
  /// Per-layer, per-dimension fractional offsets in [0, 1). Empty selects the
  /// default diagonal displacement of layer j by j/num_layers cell widths;
  /// offsets_seed != 0 instead draws them uniformly (deterministic per seed).
  std::vector<Vector> layer_offsets;
  std::uint64_t offsets_seed = 0;
  bool include_bias = false;
};

/// Sparse binary features from num_layers offset grid partitions. Exactly
/// num_layers (+bias) indices are active for every state; inputs outside the
/// bounds are clamped. Index layout is layer-major, then row-major over grid
/// cells; a coordinate exactly on an interior cell boundary belongs to the
/// higher cell.
class TileCoding : public FeatureMap {
 public:
  explicit TileCoding(TileCodingConfig cfg) : cfg_(std::move(cfg)) {
    const auto dims = static_cast<Index>(cfg_.tiles_per_dim.size());
    if (dims == 0 || cfg_.state_lows.size() != dims ||
        cfg_.state_highs.size() != dims) {
      throw std::invalid_argument("TileCoding: inconsistent dimensions");
    }
    if (cfg_.num_layers < 1) {
      throw std::invalid_argument("TileCoding: need at least one layer");
    }
    for (Index i = 0; i < dims; ++i) {
      if (cfg_.tiles_per_dim[i] < 1 || cfg_.state_highs(i) <= cfg_.state_lows(i)) {
        throw std::invalid_argument("TileCoding: bad grid or bounds");
      }
    }
    cells_per_layer_ = 1;
    for (int t : cfg_.tiles_per_dim) cells_per_layer_ *= t;
    if (cfg_.layer_offsets.empty()) {
      cfg_.layer_offsets = make_offsets(cfg_, dims);
    } else if (static_cast<int>(cfg_.layer_offsets.size()) != cfg_.num_layers) {
      throw std::invalid_argument("TileCoding: offsets/layer count mismatch");
    }
  }

  Index dim() const override {
    return static_cast<Index>(cfg_.num_layers) * cells_per_layer_ +
           (cfg_.include_bias ? 1 : 0);
  }

  Index active_count() const { return cfg_.num_layers + (cfg_.include_bias ? 1 : 0); }

  FeatureVector operator()(const Vector& state) const override {
    const auto dims = static_cast<Index>(cfg_.tiles_per_dim.size());
    if (state.size() != dims) {
      throw std::invalid_argument("TileCoding: state dimension mismatch");
    }
    std::vector<FeatureVector::Entry> active;
    active.reserve(active_count());
    for (int layer = 0; layer < cfg_.num_layers; ++layer) {
      Index cell = 0;
      for (Index dd = 0; dd < dims; ++dd) {
        const int tiles = cfg_.tiles_per_dim[dd];
        const double span = cfg_.state_highs(dd) - cfg_.state_lows(dd);
        double unit = (state(dd) - cfg_.state_lows(dd)) / span;
        unit = std::clamp(unit, 0.0, 1.0);
        const double shifted = unit * tiles + cfg_.layer_offsets[layer](dd);
        auto idx = static_cast<Index>(std::floor(shifted));
        idx = std::clamp<Index>(idx, 0, tiles - 1);
        cell = cell * tiles + idx;
      }
      active.emplace_back(static_cast<Index>(layer) * cells_per_layer_ + cell, 1.0);
    }
    if (cfg_.include_bias) active.emplace_back(dim() - 1, 1.0);
    return FeatureVector::sparse(dim(), std::move(active));
  }

  const TileCodingConfig& config() const { return cfg_; }

 private:
  static std::vector<Vector> make_offsets(const TileCodingConfig& cfg, Index dims) {
    std::vector<Vector> offsets(cfg.num_layers);
    if (cfg.offsets_seed != 0) {
      std::mt19937_64 rng(cfg.offsets_seed);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      for (auto& off : offsets) {
        off.resize(dims);
        for (Index i = 0; i < dims; ++i) off(i) = unif(rng);
      }
    } else {
      for (int j = 0; j < cfg.num_layers; ++j) {
        offsets[j] = Vector::Constant(
            dims, static_cast<double>(j) / cfg.num_layers);
      }
    }
    return offsets;
  }

  TileCodingConfig cfg_;
  Index cells_per_layer_ = 0;
};

struct RbfGridConfig {
  Vector state_lows;
  Vector state_highs;
  std::vector<int> centers_per_dim;
  /// Kernel width as a fraction of the per-dimension state range.
  double width_fraction = 0.12;
  bool include_bias = false;
};

/// Dense Gaussian features on a uniform grid of centers that includes the
/// bounds. Coordinates are normalized to [0, 1] per dimension before kernel
/// evaluation, so width_fraction is measured in units of the total range.
class RbfGrid : public FeatureMap {
 public:
  explicit RbfGrid(RbfGridConfig cfg) : cfg_(std::move(cfg)) {
    const auto dims = static_cast<Index>(cfg_.centers_per_dim.size());
    if (dims == 0 || cfg_.state_lows.size() != dims ||
        cfg_.state_highs.size() != dims) {
      throw std::invalid_argument("RbfGrid: inconsistent dimensions");
    }
    if (cfg_.width_fraction <= 0.0) {
      throw std::invalid_argument("RbfGrid: width_fraction must be positive");
    }
    Index count = 1;
    for (int c : cfg_.centers_per_dim) {
      if (c < 1) throw std::invalid_argument("RbfGrid: need >= 1 center per dim");
      count *= c;
    }
    centers_.resize(count, dims);
    std::vector<Index> digits(dims, 0);
    for (Index row = 0; row < count; ++row) {
      for (Index dd = 0; dd < dims; ++dd) {
        const int n = cfg_.centers_per_dim[dd];
        centers_(row, dd) = n == 1 ? 0.5
                                   : static_cast<double>(digits[dd]) / (n - 1);
      }
      for (Index dd = dims; dd-- > 0;) {
        if (++digits[dd] < cfg_.centers_per_dim[dd]) break;
        digits[dd] = 0;
      }
    }
  }

  Index dim() const override {
    return centers_.rows() + (cfg_.include_bias ? 1 : 0);
  }

  FeatureVector operator()(const Vector& state) const override {
    const auto dims = static_cast<Index>(cfg_.centers_per_dim.size());
    if (state.size() != dims) {
      throw std::invalid_argument("RbfGrid: state dimension mismatch");
    }
    Vector unit(dims);
    for (Index dd = 0; dd < dims; ++dd) {
      unit(dd) = (state(dd) - cfg_.state_lows(dd)) /
                 (cfg_.state_highs(dd) - cfg_.state_lows(dd));
    }
    Vector out(dim());
    const double inv_two_sigma_sq =
        1.0 / (2.0 * cfg_.width_fraction * cfg_.width_fraction);
    for (Index row = 0; row < centers_.rows(); ++row) {
      const double dist_sq = (unit.transpose() - centers_.row(row)).squaredNorm();
      out(row) = std::exp(-dist_sq * inv_two_sigma_sq);
    }
    if (cfg_.include_bias) out(dim() - 1) = 1.0;
    return FeatureVector::dense(std::move(out));
  }

  const RbfGridConfig& config() const { return cfg_; }

 private:
  RbfGridConfig cfg_;
  Matrix centers_;  // rows are normalized center coordinates
};

/// Row lookup into a fixed feature matrix; the state is a single index.
class TabularFeatures : public FeatureMap {
 public:
  explicit TabularFeatures(Matrix x) : x_(std::move(x)) {}

  Index dim() const override { return x_.cols(); }

  FeatureVector operator()(const Vector& state) const override {
    const auto row = static_cast<Index>(std::llround(state(0)));
    if (row < 0 || row >= x_.rows()) {
      throw std::invalid_argument("TabularFeatures: state index out of range");
    }
    return FeatureVector::dense(x_.row(row).transpose());
  }

 private:
  Matrix x_;
};

}  // namespace tlstd
