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

// Independent reference implementations used only by tests. Nothing here
// calls into the solver's eigenbasis route.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "tease/linalg.h"
#include "tease/solver.h"

namespace tease::oracle {

using Mat = Eigen::MatrixXd;

inline Mat random_binary(std::mt19937_64& rng, int rows, int cols, double density) {
  std::bernoulli_distribution coin(density);
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = coin(rng) ? 1.0 : 0.0;
  return m;
}

inline SparseBinaryMatrix to_sparse(const Mat& m) {
  std::vector<std::vector<std::uint32_t>> rows(m.rows());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) rows[i].push_back(static_cast<std::uint32_t>(j));
  return SparseBinaryMatrix::FromRows(m.cols(), rows);
}

inline Mat naive_gram(const Mat& m) {
  Mat g = Mat::Zero(m.cols(), m.cols());
  for (int i = 0; i < m.cols(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      for (int r = 0; r < m.rows(); ++r) g(i, j) += m(r, i) * m(r, j);
  return g;
}

// Relaxed augmented Lagrangian whose block minimizers are the β and E
// updates. The penalty is ρ(‖EDᵀ − dm(β)‖²_F − ‖EDᵀ‖²_F + ‖β‖²).
inline double relaxed_lagrangian(const Mat& e, const Eigen::VectorXd& beta,
                                 const Eigen::VectorXd& gamma, const Mat& x,
                                 const Mat& d, const Hyperparams& hp) {
  const Mat p = e * d.transpose();
  const Mat b = beta.asDiagonal();
  const Mat fit = x + x * b - x * p;
  const Eigen::VectorXd pdiag = p.diagonal();
  return fit.squaredNorm() + hp.lambda1 * (p - b).squaredNorm() +
         hp.lambda2 * e.squaredNorm() +
         2.0 * hp.rho * gamma.dot(beta - pdiag) +
         hp.rho * ((p - b).squaredNorm() - p.squaredNorm() + beta.squaredNorm());
}

// Minimizes the relaxed Lagrangian over each β_i separately by fitting a
// parabola through three evaluations.
inline Eigen::VectorXd beta_by_parabola(const Mat& e, const Eigen::VectorXd& beta0,
                                        const Eigen::VectorXd& gamma, const Mat& x,
                                        const Mat& d, const Hyperparams& hp) {
  Eigen::VectorXd out = beta0;
  for (int i = 0; i < beta0.size(); ++i) {
    auto at = [&](double v) {
      Eigen::VectorXd b = beta0;
      b[i] = v;
      return relaxed_lagrangian(e, b, gamma, x, d, hp);
    };
    const double h = 1.0;
    const double c = beta0[i];
    const double fm = at(c - h), f0 = at(c), fp = at(c + h);
    const double curvature = (fp - 2 * f0 + fm) / (h * h);
    const double slope = (fp - fm) / (2 * h);
    out[i] = c - slope / curvature;
  }
  return out;
}

// Solves (A + λ1 I)·E·DᵀD + λ2·E = R through the Kronecker form
// (DᵀD ⊗ (A + λ1 I) + λ2 I)·vec(E) = vec(R), column-major vec.
inline Mat sylvester_by_kronecker(const Mat& a, const Mat& d, const Mat& r,
                                  const Hyperparams& hp) {
  const int n = static_cast<int>(a.rows());
  const int t = static_cast<int>(d.cols());
  const Mat left = a + hp.lambda1 * Mat::Identity(n, n);
  const Mat right = d.transpose() * d;
  Mat k = Mat::Zero(n * t, n * t);
  for (int p = 0; p < t; ++p)
    for (int q = 0; q < t; ++q) k.block(p * n, q * n, n, n) = right(q, p) * left;
  k += hp.lambda2 * Mat::Identity(n * t, n * t);
  const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(r.data(), n * t);
  const Eigen::VectorXd sol = k.fullPivLu().solve(rhs);
  return Eigen::Map<const Mat>(sol.data(), n, t);
}

// The constrained objective with β eliminated: Q = EDᵀ − dm(diag(EDᵀ)),
// ‖X − XQ‖²_F + λ1‖Q‖²_F + λ2‖E‖²_F.
inline double eliminated_objective(const Mat& e, const Mat& x, const Mat& d,
                                   const Hyperparams& hp) {
  Mat q = e * d.transpose();
  q.diagonal().setZero();
  return (x - x * q).squaredNorm() + hp.lambda1 * q.squaredNorm() +
         hp.lambda2 * e.squaredNorm();
}

inline Mat eliminated_gradient(const Mat& e, const Mat& x, const Mat& d,
                               const Hyperparams& hp) {
  const Mat a = x.transpose() * x;
  Mat q = e * d.transpose();
  q.diagonal().setZero();
  const int n = static_cast<int>(q.rows());
  Mat gp = -2.0 * a * (Mat::Identity(n, n) - q) + 2.0 * hp.lambda1 * q;
  gp.diagonal().setZero();
  return gp * d + 2.0 * hp.lambda2 * e;
}

struct Minimum {
  Mat encoder;
  double value = std::numeric_limits<double>::infinity();
};

// Steepest descent with exact line search (the objective is quadratic) from
// several random starts; keeps the best end point.
inline Minimum gradient_descent_minimum(const Mat& x, const Mat& d,
                                        const Hyperparams& hp, int restarts,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Minimum best;
  for (int r = 0; r < restarts; ++r) {
    Mat e(d.rows(), d.cols());
    for (int k = 0; k < e.size(); ++k) e.data()[k] = normal(rng);
    double f = eliminated_objective(e, x, d, hp);
    for (int it = 0; it < 500000; ++it) {
      const Mat g = eliminated_gradient(e, x, d, hp);
      const double gg = g.squaredNorm();
      if (gg < 1e-26 * std::max(1.0, f * f)) break;
      // f(E − αg) = f − α‖g‖² + α²c for a quadratic.
      const double c = eliminated_objective(e - g, x, d, hp) - f + gg;
      if (!(c > 0)) break;
      e -= (gg / (2.0 * c)) * g;
      const double next = eliminated_objective(e, x, d, hp);
      if (next >= f && it > 10) {
        f = std::min(f, next);
        break;
      }
      f = next;
    }
    if (f < best.value) {
      best.value = f;
      best.encoder = e;
    }
  }
  return best;
}

// Exact minimizer of the eliminated objective by dense least squares on
// vec(E); a second opinion for the descent oracle.
inline Minimum least_squares_minimum(const Mat& x, const Mat& d,
                                     const Hyperparams& hp) {
  const int n = static_cast<int>(d.rows());
  const int t = static_cast<int>(d.cols());
  const int m = static_cast<int>(x.rows());
  const int rows = m * n + n * n + n * t;
  Mat map(rows, n * t);
  Eigen::VectorXd target = Eigen::VectorXd::Zero(rows);
  for (int k = 0; k < n * t; ++k) {
    Mat e = Mat::Zero(n, t);
    e.data()[k] = 1.0;
    Mat q = e * d.transpose();
    q.diagonal().setZero();
    const Mat xq = x * q;
    Eigen::VectorXd col(rows);
    col << Eigen::Map<const Eigen::VectorXd>(xq.data(), m * n),
        std::sqrt(hp.lambda1) * Eigen::Map<const Eigen::VectorXd>(q.data(), n * n),
        std::sqrt(hp.lambda2) * Eigen::Map<const Eigen::VectorXd>(e.data(), n * t);
    map.col(k) = col;
  }
  target.head(m * n) = Eigen::Map<const Eigen::VectorXd>(x.data(), m * n);
  const Eigen::VectorXd sol = map.colPivHouseholderQr().solve(target);
  Minimum out;
  out.encoder = Eigen::Map<const Mat>(sol.data(), n, t);
  out.value = eliminated_objective(out.encoder, x, d, hp);
  return out;
}

inline Mat central_difference(const std::function<double(const Mat&)>& f,
                              const Mat& at, double step) {
  Mat grad(at.rows(), at.cols());
  for (int k = 0; k < at.size(); ++k) {
    Mat plus = at, minus = at;
    plus.data()[k] += step;
    minus.data()[k] -= step;
    grad.data()[k] = (f(plus) - f(minus)) / (2 * step);
  }
  return grad;
}

// Ranking metrics straight from their definitions.
inline double brute_recall(const std::vector<std::uint32_t>& ranking,
                           const std::set<std::uint32_t>& truth, std::size_t k) {
  std::size_t hits = 0;
  for (std::size_t r = 0; r < std::min(k, ranking.size()); ++r)
    hits += truth.count(ranking[r]);
  return static_cast<double>(hits) / static_cast<double>(std::min(k, truth.size()));
}

inline double dcg(const std::vector<std::uint32_t>& ranking,
                  const std::set<std::uint32_t>& truth, std::size_t k) {
  double out = 0.0;
  for (std::size_t r = 0; r < std::min(k, ranking.size()); ++r)
    if (truth.count(ranking[r])) out += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return out;
}

// Ideal DCG found by trying every ordering of items 0..n-1.
inline double best_dcg(std::uint32_t n, const std::set<std::uint32_t>& truth, std::size_t k) {
  std::vector<std::uint32_t> perm(n);
  for (std::uint32_t i = 0; i < n; ++i) perm[i] = i;
  double best = 0.0;
  do {
    best = std::max(best, dcg(perm, truth, k));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline double brute_ndcg(const std::vector<std::uint32_t>& ranking,
                         const std::set<std::uint32_t>& truth, std::size_t k,
                         double ideal) {
  return dcg(ranking, truth, k) / ideal;
}

}  // namespace tease::oracle
