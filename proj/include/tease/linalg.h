// Copyright 2026 The Tease Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace tease {

// All solver arithmetic is double precision; Gram matrices of sparse binary
// data are too ill-conditioned for float.
using DenseMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Binary matrix in compressed sparse row layout. Only the pattern is stored;
// every stored entry has value 1.
class SparseBinaryMatrix {
 public:
  SparseBinaryMatrix() = default;

  // Builds from (row, col) coordinates. Duplicates are merged. Throws
  // ValidationError on out-of-range indices.
  static SparseBinaryMatrix FromCoordinates(
      std::size_t rows, std::size_t cols,
      std::vector<std::pair<std::uint32_t, std::uint32_t>> coords);

  // Builds from per-row column lists (any order, duplicates merged).
  static SparseBinaryMatrix FromRows(
      std::size_t cols, const std::vector<std::vector<std::uint32_t>>& rows);

  std::size_t rows() const { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return col_idx_.size(); }

  std::span<const std::uint32_t> row(std::size_t r) const {
    return {col_idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  bool contains(std::size_t r, std::uint32_t c) const;

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::uint32_t>& col_idx() const { return col_idx_; }

  // Number of stored entries per column.
  std::vector<std::size_t> column_counts() const;

  DenseMatrix to_dense() const;
  SparseBinaryMatrix transpose() const;

  bool operator==(const SparseBinaryMatrix&) const = default;

 private:
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> col_idx_;
};

struct SymEig {
  Vector eigenvalues;  // ascending
  DenseMatrix eigenvectors;  // columns orthonormal
};

// Upper bound on the bytes a single dense result may occupy. Default 8 GiB.
void set_memory_budget(std::size_t bytes);
std::size_t memory_budget();

// MᵀM. Throws ResourceError when cols² doubles exceed the memory budget.
DenseMatrix gram(const SparseBinaryMatrix& m);
DenseMatrix gram(const DenseMatrix& m);

// Symmetric eigendecomposition with ascending eigenvalues. The input is
// symmetrized first; asymmetry above 1e-8 relative is rejected. Negative
// eigenvalues with magnitude ≤ 1e-10·max(1, ‖A‖) are clamped to zero.
SymEig sym_eig(const DenseMatrix& a);

// ‖Q·diag(w)·Qᵀ − A‖_F / max(1, ‖A‖_F)
double reconstruction_residual(const SymEig& eig, const DenseMatrix& a);
// ‖QᵀQ − I‖_F
double orthonormality_residual(const SymEig& eig);

// diag(A·B) without forming the product.
Vector diag_of_product(const DenseMatrix& a, const DenseMatrix& b);

// Row-wise dot products: out_i = ⟨A_i, B_i⟩, i.e. diag(A·Bᵀ).
Vector rowwise_dot(const DenseMatrix& a, const DenseMatrix& b);

// Throws NumericalError naming `what` if any entry is NaN or infinite.
void require_finite(const DenseMatrix& m, const char* what);
void require_finite(const Vector& v, const char* what);

}  // namespace tease
