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
#include <string>
#include <vector>

#include "tease/dataset.h"
#include "tease/linalg.h"

namespace tease {

struct Hyperparams {
  double lambda1 = 1.0;  // weight of the diagonal-suppression term
  double lambda2 = 1.0;  // ℓ2 weight on E; must be > 0
  double rho = 1.0;      // ADMM penalty
  std::size_t max_iterations = 500;
  double tolerance = 1e-6;
  // Verify every E-update against the linear system it solves.
  bool verify_sylvester = true;

  void validate() const;
};

// Everything the iterations reuse: the item Gram matrix and its
// eigendecomposition, the tag Gram eigendecomposition and the elementwise
// inverse G of the transformed system.
struct Precomputation {
  DenseMatrix xtx;       // n × n
  Vector xtx_diag;       // diag(XᵀX)
  DenseMatrix decoder;   // D, n × t
  SymEig items;          // XᵀX = U diag(μ) Uᵀ
  SymEig tags;           // DᵀD = V diag(η) Vᵀ
  DenseMatrix dtd;       // DᵀD
  DenseMatrix g;         // G(i,j) = 1 / (η_j (μ_i + λ1) + λ2)
  double lambda1 = 0.0;  // regularization G was built for
  double lambda2 = 0.0;

  std::size_t num_items() const { return static_cast<std::size_t>(decoder.rows()); }
  std::size_t num_tags() const { return static_cast<std::size_t>(decoder.cols()); }

  // Rebuilds G for new (λ1, λ2) without redoing the eigendecompositions.
  void set_regularization(const Hyperparams& hp);
};

Precomputation precompute(const SparseBinaryMatrix& x, const DenseMatrix& decoder,
                          const Hyperparams& hp);
Precomputation precompute_from_gram(DenseMatrix xtx, const DenseMatrix& decoder,
                                    const Hyperparams& hp);

struct AdmmState {
  DenseMatrix encoder;  // E, n × t
  Vector beta;          // n
  Vector gamma;         // n, scaled multipliers
  std::size_t iteration = 0;
  double primal_residual = 0.0;  // ‖β − diag(EDᵀ)‖∞
  double dual_step = 0.0;        // ‖γ_k − γ_{k−1}‖∞

  static AdmmState Zero(std::size_t items, std::size_t tags);
};

// β minimizing the relaxed Lagrangian for fixed E and γ (closed form).
Vector update_beta(const AdmmState& state, const Precomputation& pre,
                   const Hyperparams& hp);

// Right-hand side (XᵀX·dm(1+β) + ρ·dm(γ+β) + λ1·dm(β))·D of the E-system.
DenseMatrix e_update_rhs(const Vector& beta, const Vector& gamma,
                         const Precomputation& pre, const Hyperparams& hp);

// ‖(XᵀX + λ1 I)·E·DᵀD + λ2 E − RHS‖_F divided by the larger of ‖RHS‖_F and
// ‖(XᵀX + λ1 I)·E·DᵀD‖_F + λ2‖E‖_F.
double sylvester_residual(const DenseMatrix& e, const DenseMatrix& rhs,
                          const Precomputation& pre, const Hyperparams& hp);

inline constexpr double kSylvesterTolerance = 1e-8;

// Solves (XᵀX + λ1 I)·E·DᵀD + λ2·E = RHS in the eigenbases:
// F = Uᵀ·RHS·V, Y = F ⊙ G, E = U·Y·Vᵀ. When hp.verify_sylvester is set, a
// relative residual above kSylvesterTolerance throws NumericalError.
// `residual_out`, if given, receives the residual (NaN when not verified).
DenseMatrix update_E(const AdmmState& state, const Precomputation& pre,
                     const Hyperparams& hp, double* residual_out = nullptr);

// Dual ascent on the constraint diag(EDᵀ) = β: γ + β − diag(EDᵀ).
Vector update_gamma(const AdmmState& state, const DenseMatrix& decoder);

// ‖X + X·dm(β) − X·E·Dᵀ‖²_F + λ1‖E·Dᵀ − dm(β)‖²_F + λ2‖E‖²_F, evaluated from
// the sparse interactions.
double objective(const DenseMatrix& e, const Vector& beta,
                 const SparseBinaryMatrix& x, const DenseMatrix& decoder,
                 const Hyperparams& hp);
// Same value computed from XᵀX alone in O(n²t).
double objective_from_gram(const DenseMatrix& e, const Vector& beta,
                           const DenseMatrix& xtx, const DenseMatrix& decoder,
                           const Hyperparams& hp);
// Gradient of objective() with respect to E at fixed β.
DenseMatrix objective_gradient(const DenseMatrix& e, const Vector& beta,
                               const DenseMatrix& xtx, const DenseMatrix& decoder,
                               const Hyperparams& hp);

struct ConvergenceReport {
  std::size_t iterations = 0;
  double primal_residual = 0.0;
  double dual_step = 0.0;
  double objective = 0.0;
  bool converged = false;
};

struct IterationLog {
  std::size_t iteration = 0;
  double primal_residual = 0.0;
  double dual_step = 0.0;
  double sylvester_residual = 0.0;
};

struct AdmmResult {
  AdmmState state;
  ConvergenceReport report;
};

// Runs E → β → γ from zero until both the primal residual and the dual step
// are ≤ hp.tolerance, or hp.max_iterations. Not converging is reported, not
// thrown. `trace` receives one entry per iteration when non-null.
AdmmResult solve_admm(const Precomputation& pre, const Hyperparams& hp,
                      std::vector<IterationLog>* trace = nullptr);

struct EncoderModel {
  DenseMatrix encoder;            // E, items × tags
  std::vector<Tag> vocabulary;    // one per column of E
  std::vector<std::string> item_ids;  // one per row of E; may be empty
  Hyperparams hyperparams;
  ConvergenceReport report;

  std::size_t num_items() const { return static_cast<std::size_t>(encoder.rows()); }
  std::size_t num_tags() const { return static_cast<std::size_t>(encoder.cols()); }
};

// Trains on the interaction matrix with D = [S | popularity].
EncoderModel train(const SparseBinaryMatrix& x, const TagMatrix& tags,
                   const Hyperparams& hp,
                   std::vector<IterationLog>* trace = nullptr);

}  // namespace tease
