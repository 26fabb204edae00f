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
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "tlstd/linalg.hpp"

namespace tlstd {

/// Incrementally maintained truncated singular value decomposition of a
/// streaming sum of outer products.
///
/// The represented d x d matrix is
///
///     M = U * L * diag(sigma) * R^T * V^T
///
/// where U, V (d x c) hold orthonormal columns, L, R (c x c) are small
/// orthonormal rotations accumulated by rank-one updates and folded into the
/// bases only at compaction, and sigma is sorted non-increasing. The width c
/// may grow up to 2r; reaching 2r folds the rotations and truncates back to
/// the top r singular triples. Mini-batch updates write the bases directly
/// and keep L = R = I.
///
/// Single writer; concurrent reads (solve/reconstruct) are safe only while no
/// update is in flight.
class TruncatedSvd {
 public:
  /// Residual-norm threshold below which an update direction is treated as
  /// already inside the span of the current basis.
  static constexpr double kResidualEps = 1e-5;

  TruncatedSvd(Index dim, Index target_rank)
      : d_(dim), r_(target_rank) {
    if (target_rank < 1 || target_rank > dim) {
      throw std::invalid_argument("TruncatedSvd: need 1 <= target_rank <= dim");
    }
    U_.resize(d_, 0);
    V_.resize(d_, 0);
    L_.resize(0, 0);
    R_.resize(0, 0);
    sigma_.resize(0);
  }

  /// Rebuilds an instance from explicit factors. Shapes must be consistent
  /// and the width may not exceed 2r; orthonormality is the caller's
  /// responsibility (checked loosely).
  static TruncatedSvd from_factors(Index target_rank, Matrix u, Vector sigma,
                                   Matrix v, Matrix l, Matrix r) {
    TruncatedSvd out(u.rows(), target_rank);
    const Index c = u.cols();
    if (v.rows() != out.d_ || v.cols() != c || sigma.size() != c ||
        l.rows() != c || l.cols() != c || r.rows() != c || r.cols() != c) {
      throw std::invalid_argument("TruncatedSvd::from_factors: inconsistent shapes");
    }
    if (c > 2 * target_rank) {
      throw std::invalid_argument("TruncatedSvd::from_factors: width exceeds 2r");
    }
    if (orthonormality_error(u) > 1e-6 || orthonormality_error(v) > 1e-6 ||
        orthonormality_error(l) > 1e-6 || orthonormality_error(r) > 1e-6) {
      throw std::invalid_argument("TruncatedSvd::from_factors: factors not orthonormal");
    }
    out.U_ = std::move(u);
    out.V_ = std::move(v);
    out.L_ = std::move(l);
    out.R_ = std::move(r);
    out.sigma_ = std::move(sigma);
    out.identity_rotations_ = out.L_.isIdentity(1e-14) && out.R_.isIdentity(1e-14);
    return out;
  }

  Index dim() const { return d_; }
  Index target_rank() const { return r_; }
  Index width() const { return sigma_.size(); }

  const Matrix& left_basis() const { return U_; }
  const Matrix& right_basis() const { return V_; }
  const Matrix& left_rotation() const { return L_; }
  const Matrix& right_rotation() const { return R_; }
  const Vector& singular_values() const { return sigma_; }
  bool rotations_pending() const { return !identity_rotations_; }

  /// Uniformly down-weights the represented matrix: sigma *= factor. O(c).
  void scale(double factor) {
    if (factor <= 0.0) {
      throw std::invalid_argument("TruncatedSvd::scale: factor must be positive");
    }
    if (factor != 1.0) sigma_ *= factor;
  }

  /// Adds the outer product z * dvec^T. Small-core diagonalization plus
  /// deferred rotation folds; O(d c + c^3) per call.
  void rank_one_update(const Vector& z, const Vector& dvec) {
    if (z.size() != d_ || dvec.size() != d_) {
      throw std::invalid_argument("TruncatedSvd::rank_one_update: length mismatch");
    }
    if (z.norm() == 0.0 || dvec.norm() == 0.0) return;  // zero outer product

    const Index c = width();
    Vector m = L_.transpose() * (U_.transpose() * z);
    Vector p = z - U_ * (L_ * m);
    Vector n = R_.transpose() * (V_.transpose() * dvec);
    Vector q = dvec - V_ * (R_ * n);
    // Re-orthogonalize the residuals once; without this the appended
    // directions inherit in-span error amplified by 1/||p||, and the bases
    // drift within a handful of nearly-collinear updates.
    {
      const Vector p_coeff = U_.transpose() * p;
      m += L_.transpose() * p_coeff;
      p -= U_ * p_coeff;
      const Vector q_coeff = V_.transpose() * q;
      n += R_.transpose() * q_coeff;
      q -= V_ * q_coeff;
    }
    const double p_norm = p.norm();
    const double q_norm = q.norm();
    const bool grow_left = p_norm > kResidualEps;
    const bool grow_right = q_norm > kResidualEps;

    if (!grow_left && !grow_right) {
      // Both directions already inside the span: the core stays c x c and the
      // width is unchanged.
      if (c == 0) return;
      Matrix core = Matrix(sigma_.asDiagonal()) + m * n.transpose();
      Eigen::BDCSVD<Matrix> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);
      L_ = L_ * svd.matrixU();
      R_ = R_ * svd.matrixV();
      sigma_ = svd.singularValues();
      identity_rotations_ = false;
      return;
    }

    // Grow the core to width c+1. A sub-threshold residual enters the core
    // as exactly zero; its basis slot is filled with a unit direction
    // orthogonal to the existing columns, which carries no weight and is
    // dropped at the next compaction.
    Matrix core = Matrix::Zero(c + 1, c + 1);
    core.topLeftCorner(c, c) = Matrix(sigma_.asDiagonal());
    Vector mp(c + 1), nq(c + 1);
    mp.head(c) = m;
    mp(c) = grow_left ? p_norm : 0.0;
    nq.head(c) = n;
    nq(c) = grow_right ? q_norm : 0.0;
    core += mp * nq.transpose();

    Eigen::BDCSVD<Matrix> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);
    L_ = embed_and_rotate(L_, svd.matrixU());
    R_ = embed_and_rotate(R_, svd.matrixV());
    sigma_ = svd.singularValues();

    U_.conservativeResize(Eigen::NoChange, c + 1);
    U_.col(c) = grow_left ? Vector(p / p_norm) : padding_column(U_.leftCols(c));
    V_.conservativeResize(Eigen::NoChange, c + 1);
    V_.col(c) = grow_right ? Vector(q / q_norm) : padding_column(V_.leftCols(c));
    identity_rotations_ = false;

    if (width() >= 2 * r_) compact();
  }

  /// Adds Z * D^T for d x k blocks Z, D. Requires L = R = I (call compact()
  /// first when rank-one updates left rotations pending). O(d k^2 + k^3);
  /// amortized O(d r) when invoked every k = r samples.
  void minibatch_update(const Matrix& z_block, const Matrix& d_block) {
    if (z_block.rows() != d_ || d_block.rows() != d_ ||
        z_block.cols() != d_block.cols()) {
      throw std::invalid_argument("TruncatedSvd::minibatch_update: shape mismatch");
    }
    if (rotations_pending()) {
      throw std::logic_error(
          "TruncatedSvd::minibatch_update: deferred rotations pending; compact() first");
    }
    const Index k = z_block.cols();
    if (k == 0) return;

    const Index c = width();
    Matrix coeff_z, resid_q_z, resid_r_z;
    project_out(U_, z_block, coeff_z, resid_q_z, resid_r_z);
    Matrix coeff_d, resid_q_d, resid_r_d;
    project_out(V_, d_block, coeff_d, resid_q_d, resid_r_d);

    Matrix core = Matrix::Zero(c + k, c + k);
    core.topLeftCorner(c, c) = Matrix(sigma_.asDiagonal());
    Matrix left_stack(c + k, k), right_stack(c + k, k);
    left_stack.topRows(c) = coeff_z;
    left_stack.bottomRows(k) = resid_r_z;
    right_stack.topRows(c) = coeff_d;
    right_stack.bottomRows(k) = resid_r_d;
    core += left_stack * right_stack.transpose();

    Eigen::BDCSVD<Matrix> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sig = svd.singularValues();
    Index keep = std::min(c + k, r_);
    // Drop numerically-zero tail directions so in-span blocks leave the
    // width unchanged.
    const double floor_val = sig.size() > 0 ? 1e-12 * sig(0) : 0.0;
    while (keep > 0 && sig(keep - 1) <= floor_val) --keep;

    Matrix extended_u(d_, c + k), extended_v(d_, c + k);
    extended_u.leftCols(c) = U_;
    extended_u.rightCols(k) = resid_q_z;
    extended_v.leftCols(c) = V_;
    extended_v.rightCols(k) = resid_q_d;
    U_ = extended_u * svd.matrixU().leftCols(keep);
    V_ = extended_v * svd.matrixV().leftCols(keep);
    sigma_ = sig.head(keep);
    L_ = Matrix::Identity(keep, keep);
    R_ = Matrix::Identity(keep, keep);
    identity_rotations_ = true;
  }

  /// Folds the deferred rotations into the bases, re-orthonormalizes, and
  /// truncates to the top min(c, r) singular triples. Afterwards L = R = I.
  void compact() {
    const Index c = width();
    if (c == 0) return;
    if (identity_rotations_ && c <= r_) return;

    Matrix folded_u = U_ * L_;
    Matrix folded_v = V_ * R_;
    Eigen::HouseholderQR<Matrix> qr_u(folded_u);
    Eigen::HouseholderQR<Matrix> qr_v(folded_v);
    Matrix thin_q_u = qr_u.householderQ() * Matrix::Identity(d_, c);
    Matrix thin_q_v = qr_v.householderQ() * Matrix::Identity(d_, c);
    Matrix r_u = qr_u.matrixQR().topRows(c).triangularView<Eigen::Upper>();
    Matrix r_v = qr_v.matrixQR().topRows(c).triangularView<Eigen::Upper>();

    Matrix core = r_u * sigma_.asDiagonal() * r_v.transpose();
    Eigen::BDCSVD<Matrix> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sig = svd.singularValues();
    Index keep = std::min(c, r_);
    // Numerically-zero directions (padded slots included) are dropped here.
    const double floor_val = sig.size() > 0 ? 1e-12 * sig(0) : 0.0;
    while (keep > 0 && sig(keep - 1) <= floor_val) --keep;
    U_ = thin_q_u * svd.matrixU().leftCols(keep);
    V_ = thin_q_v * svd.matrixV().leftCols(keep);
    sigma_ = sig.head(keep);
    L_ = Matrix::Identity(keep, keep);
    R_ = Matrix::Identity(keep, keep);
    identity_rotations_ = true;
  }

  /// Pseudo-inverse solve V R Sigma^+ L^T U^T b. Inversion walks the sorted
  /// singular values and stops at the first one at or below
  /// rel_cutoff * sigma_1; the remaining directions contribute nothing.
  /// O(d c). An empty factorization yields the zero vector.
  Vector solve(const Vector& b, double rel_cutoff = 0.01) const {
    if (b.size() != d_) {
      throw std::invalid_argument("TruncatedSvd::solve: length mismatch");
    }
    const Index c = width();
    if (c == 0) return Vector::Zero(d_);
    Vector coeffs = L_.transpose() * (U_.transpose() * b);
    const double threshold = std::max(rel_cutoff, 0.0) * sigma_(0);
    for (Index i = 0; i < c; ++i) {
      if (sigma_(i) > threshold && sigma_(i) > 0.0) {
        coeffs(i) /= sigma_(i);
      } else {
        coeffs.tail(c - i).setZero();
        break;
      }
    }
    return V_ * (R_ * coeffs);
  }

  /// Dense d x d realization of the represented matrix (diagnostics/tests).
  Matrix reconstruct() const {
    if (width() == 0) return Matrix::Zero(d_, d_);
    return U_ * L_ * sigma_.asDiagonal() * R_.transpose() * V_.transpose();
  }

  /// Plain-text dump: header "d r c" then row-major U, sigma, V, L, R.
  void dump(std::ostream& os) const {
    const Index c = width();
    os << d_ << ' ' << r_ << ' ' << c << '\n';
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    write_row_major(os, U_);
    for (Index i = 0; i < c; ++i) os << sigma_(i) << (i + 1 < c ? ' ' : '\n');
    if (c == 0) os << '\n';
    write_row_major(os, V_);
    write_row_major(os, L_);
    write_row_major(os, R_);
  }

  static TruncatedSvd load(std::istream& is) {
    Index d = 0, r = 0, c = 0;
    if (!(is >> d >> r >> c)) {
      throw std::invalid_argument("TruncatedSvd::load: bad header");
    }
    Matrix u = read_row_major(is, d, c);
    Vector sigma(c);
    for (Index i = 0; i < c; ++i) is >> sigma(i);
    Matrix v = read_row_major(is, d, c);
    Matrix l = read_row_major(is, c, c);
    Matrix r_mat = read_row_major(is, c, c);
    if (!is) throw std::invalid_argument("TruncatedSvd::load: truncated data");
    return from_factors(r, std::move(u), std::move(sigma), std::move(v),
                        std::move(l), std::move(r_mat));
  }

 private:
  // [[old, 0], [0, 1]] * small, for (c+1)-wide small rotations.
  static Matrix embed_and_rotate(const Matrix& old, const Matrix& small) {
    const Index c = old.rows();
    Matrix out(c + 1, c + 1);
    out.topRows(c) = old * small.topRows(c);
    out.bottomRows(1) = small.bottomRows(1);
    return out;
  }

  // Classical block Gram-Schmidt with one re-orthogonalization pass:
  // block = basis * coeff + q * r with q^T basis ~ 0 and q^T q = I.
  static void project_out(const Matrix& basis, const Matrix& block,
                          Matrix& coeff, Matrix& q, Matrix& r) {
    const Index k = block.cols();
    coeff = basis.transpose() * block;
    Matrix resid = block - basis * coeff;
    Matrix correction = basis.transpose() * resid;
    coeff += correction;
    resid -= basis * correction;
    Eigen::HouseholderQR<Matrix> qr(resid);
    q = qr.householderQ() * Matrix::Identity(block.rows(), k);
    r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  }

  // Deterministic unit vector orthogonal to the columns of basis: residual of
  // the coordinate axis least represented in the basis rows.
  static Vector padding_column(const Eigen::Ref<const Matrix>& basis) {
    const Index d = basis.rows();
    if (basis.cols() == 0) {
      Vector e = Vector::Zero(d);
      e(0) = 1.0;
      return e;
    }
    Index best = 0;
    double best_norm = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < d; ++i) {
      const double row_norm = basis.row(i).squaredNorm();
      if (row_norm < best_norm) {
        best_norm = row_norm;
        best = i;
      }
    }
    Vector e = Vector::Zero(d);
    e(best) = 1.0;
    Vector resid = e - basis * (basis.transpose() * e);
    resid -= basis * (basis.transpose() * resid);
    return resid / resid.norm();
  }

  static void write_row_major(std::ostream& os, const Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) {
        os << m(i, j) << (j + 1 < m.cols() ? ' ' : '\n');
      }
    }
    if (m.rows() == 0 || m.cols() == 0) os << '\n';
  }

  static Matrix read_row_major(std::istream& is, Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) is >> m(i, j);
    }
    return m;
  }

  Index d_ = 0;
  Index r_ = 0;
  Matrix U_, V_, L_, R_;
  Vector sigma_;
  bool identity_rotations_ = true;
};

}  // namespace tlstd
