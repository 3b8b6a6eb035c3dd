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

#include "tease/linalg.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "tease/errors.h"

namespace tease {
namespace {

std::atomic<std::size_t> g_memory_budget{std::size_t{8} << 30};

void check_budget(std::size_t rows, std::size_t cols) {
  const double bytes =
      static_cast<double>(rows) * static_cast<double>(cols) * sizeof(double);
  if (bytes > static_cast<double>(g_memory_budget.load())) {
    throw ResourceError("dense " + std::to_string(rows) + "x" +
                        std::to_string(cols) + " result needs " +
                        std::to_string(static_cast<long long>(bytes)) +
                        " bytes, budget is " +
                        std::to_string(g_memory_budget.load()));
  }
}

}  // namespace

void set_memory_budget(std::size_t bytes) { g_memory_budget = bytes; }
std::size_t memory_budget() { return g_memory_budget; }

SparseBinaryMatrix SparseBinaryMatrix::FromCoordinates(
    std::size_t rows, std::size_t cols,
    std::vector<std::pair<std::uint32_t, std::uint32_t>> coords) {
  for (const auto& [r, c] : coords) {
    if (r >= rows || c >= cols) {
      throw ValidationError("coordinate (" + std::to_string(r) + ", " +
                            std::to_string(c) + ") outside " +
                            std::to_string(rows) + "x" + std::to_string(cols));
    }
  }
  std::sort(coords.begin(), coords.end());
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());

  SparseBinaryMatrix out;
  out.cols_ = cols;
  out.row_ptr_.assign(rows + 1, 0);
  out.col_idx_.reserve(coords.size());
  for (const auto& [r, c] : coords) {
    ++out.row_ptr_[r + 1];
    out.col_idx_.push_back(c);
  }
  for (std::size_t r = 0; r < rows; ++r) out.row_ptr_[r + 1] += out.row_ptr_[r];
  return out;
}

SparseBinaryMatrix SparseBinaryMatrix::FromRows(
    std::size_t cols, const std::vector<std::vector<std::uint32_t>>& rows) {
  SparseBinaryMatrix out;
  out.cols_ = cols;
  out.row_ptr_.assign(1, 0);
  out.row_ptr_.reserve(rows.size() + 1);
  for (const auto& items : rows) {
    std::vector<std::uint32_t> sorted = items;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    if (!sorted.empty() && sorted.back() >= cols) {
      throw ValidationError("column index " + std::to_string(sorted.back()) +
                            " >= " + std::to_string(cols));
    }
    out.col_idx_.insert(out.col_idx_.end(), sorted.begin(), sorted.end());
    out.row_ptr_.push_back(out.col_idx_.size());
  }
  return out;
}

bool SparseBinaryMatrix::contains(std::size_t r, std::uint32_t c) const {
  const auto cols = row(r);
  return std::binary_search(cols.begin(), cols.end(), c);
}

std::vector<std::size_t> SparseBinaryMatrix::column_counts() const {
  std::vector<std::size_t> counts(cols_, 0);
  for (const auto c : col_idx_) ++counts[c];
  return counts;
}

DenseMatrix SparseBinaryMatrix::to_dense() const {
  check_budget(rows(), cols_);
  DenseMatrix out = DenseMatrix::Zero(rows(), cols_);
  for (std::size_t r = 0; r < rows(); ++r) {
    for (const auto c : row(r)) out(r, c) = 1.0;
  }
  return out;
}

SparseBinaryMatrix SparseBinaryMatrix::transpose() const {
  std::vector<std::vector<std::uint32_t>> cols(cols_);
  for (std::size_t r = 0; r < rows(); ++r) {
    for (const auto c : row(r)) cols[c].push_back(static_cast<std::uint32_t>(r));
  }
  return FromRows(rows(), cols);
}

DenseMatrix gram(const SparseBinaryMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw ValidationError("gram of an empty matrix");
  }
  const std::size_t n = m.cols();
  check_budget(n, n);
  DenseMatrix g = DenseMatrix::Zero(n, n);
  // Accumulate the upper triangle row by row, then mirror.
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto cols = m.row(r);
    for (std::size_t a = 0; a < cols.size(); ++a) {
      double* grow = g.data() + static_cast<std::size_t>(cols[a]) * n;
      for (std::size_t b = a; b < cols.size(); ++b) grow[cols[b]] += 1.0;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) g(j, i) = g(i, j);
  }
  return g;
}

DenseMatrix gram(const DenseMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw ValidationError("gram of an empty matrix");
  }
  check_budget(m.cols(), m.cols());
  DenseMatrix g = DenseMatrix::Zero(m.cols(), m.cols());
  g.selfadjointView<Eigen::Upper>().rankUpdate(m.transpose());
  g.triangularView<Eigen::StrictlyLower>() = g.transpose();
  return g;
}

SymEig sym_eig(const DenseMatrix& a) {
  if (a.rows() != a.cols()) {
    throw ValidationError("sym_eig needs a square matrix, got " +
                          std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()));
  }
  require_finite(a, "sym_eig input");
  const double scale = std::max(1.0, a.norm());
  const double asym = (a - a.transpose()).norm();
  if (asym > 1e-8 * scale) {
    throw ValidationError("sym_eig input not symmetric: ‖A − Aᵀ‖_F = " +
                          std::to_string(asym));
  }
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw NumericalError(
        "symmetric eigensolver did not converge within " +
        std::to_string(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>::m_maxIterations) +
        " QR sweeps per eigenvalue (n = " + std::to_string(a.rows()) + ")");
  }

  SymEig out;
  out.eigenvalues = solver.eigenvalues();
  out.eigenvectors = solver.eigenvectors();
  const double clamp = 1e-10 * scale;
  for (Eigen::Index i = 0; i < out.eigenvalues.size(); ++i) {
    double& w = out.eigenvalues[i];
    if (w < 0.0 && -w <= clamp) w = 0.0;
  }
  return out;
}

double reconstruction_residual(const SymEig& eig, const DenseMatrix& a) {
  const DenseMatrix rebuilt = eig.eigenvectors *
                              eig.eigenvalues.asDiagonal() *
                              eig.eigenvectors.transpose();
  return (rebuilt - a).norm() / std::max(1.0, a.norm());
}

double orthonormality_residual(const SymEig& eig) {
  const auto n = eig.eigenvectors.cols();
  return (eig.eigenvectors.transpose() * eig.eigenvectors -
          DenseMatrix::Identity(n, n))
      .norm();
}

Vector diag_of_product(const DenseMatrix& a, const DenseMatrix& b) {
  Vector out(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) out[i] = a.row(i).dot(b.col(i));
  return out;
}

Vector rowwise_dot(const DenseMatrix& a, const DenseMatrix& b) {
  return a.cwiseProduct(b).rowwise().sum();
}

void require_finite(const DenseMatrix& m, const char* what) {
  if (!m.allFinite()) throw NumericalError(std::string("non-finite entry in ") + what);
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw NumericalError(std::string("non-finite entry in ") + what);
}

}  // namespace tease
