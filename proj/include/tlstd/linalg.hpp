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

#include <Eigen/Dense>

namespace tlstd {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Max-norm deviation of B^T B from the identity.
inline double orthonormality_error(const Matrix& basis) {
  if (basis.cols() == 0) return 0.0;
  Matrix gram = basis.transpose() * basis;
  gram.diagonal().array() -= 1.0;
  return gram.cwiseAbs().maxCoeff();
}

inline double relative_error(const Vector& actual, const Vector& expected) {
  const double denom = expected.norm();
  if (denom == 0.0) return actual.norm();
  return (actual - expected).norm() / denom;
}

inline double relative_frobenius_error(const Matrix& actual, const Matrix& expected) {
  const double denom = expected.norm();
  if (denom == 0.0) return actual.norm();
  return (actual - expected).norm() / denom;
}

/// Best rank-r approximation by dense SVD truncation.
inline Matrix truncate_to_rank(const Matrix& a, Index rank) {
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Index keep = std::min(rank, svd.singularValues().size());
  return svd.matrixU().leftCols(keep) *
         svd.singularValues().head(keep).asDiagonal() *
         svd.matrixV().leftCols(keep).transpose();
}

/// Moore-Penrose solve with a relative zero threshold on singular values.
inline Vector pseudo_solve(const Matrix& a, const Vector& b, double rel_tol = 1e-12) {
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sig = svd.singularValues();
  Vector coeffs = svd.matrixU().transpose() * b;
  const double cut = sig.size() > 0 ? rel_tol * sig(0) : 0.0;
  for (Index i = 0; i < sig.size(); ++i) {
    coeffs(i) = sig(i) > cut ? coeffs(i) / sig(i) : 0.0;
  }
  return svd.matrixV() * coeffs;
}

}  // namespace tlstd
