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

#include "tease/solver.h"

#include <cmath>
#include <limits>
#include <string>

#include <spdlog/spdlog.h>

#include "tease/errors.h"

namespace tease {
namespace {

double inf_norm(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

void check_shapes(const DenseMatrix& xtx, const DenseMatrix& decoder) {
  if (xtx.rows() != xtx.cols() || xtx.rows() != decoder.rows() ||
      decoder.cols() == 0) {
    throw ValidationError("shape mismatch: XᵀX is " +
                          std::to_string(xtx.rows()) + "x" +
                          std::to_string(xtx.cols()) + ", D is " +
                          std::to_string(decoder.rows()) + "x" +
                          std::to_string(decoder.cols()));
  }
}

}  // namespace

void Hyperparams::validate() const {
  if (!std::isfinite(lambda1) || lambda1 < 0.0) {
    throw ValidationError("lambda1 must be finite and >= 0");
  }
  if (!std::isfinite(lambda2) || lambda2 <= 0.0) {
    throw ValidationError("lambda2 must be finite and > 0");
  }
  if (!std::isfinite(rho) || rho <= 0.0) {
    throw ValidationError("rho must be finite and > 0");
  }
  if (!(tolerance > 0.0)) throw ValidationError("tolerance must be > 0");
  if (max_iterations == 0) throw ValidationError("max_iterations must be >= 1");
}

void Precomputation::set_regularization(const Hyperparams& hp) {
  hp.validate();
  const auto n = items.eigenvalues.size();
  const auto t = tags.eigenvalues.size();
  g.resize(n, t);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = items.eigenvalues[i] + hp.lambda1;
    for (Eigen::Index j = 0; j < t; ++j) {
      g(i, j) = 1.0 / (tags.eigenvalues[j] * mu + hp.lambda2);
    }
  }
  if (!g.allFinite() || (g.array() <= 0.0).any()) {
    throw NumericalError("G has non-finite or non-positive entries");
  }
  lambda1 = hp.lambda1;
  lambda2 = hp.lambda2;
}

Precomputation precompute_from_gram(DenseMatrix xtx, const DenseMatrix& decoder,
                                    const Hyperparams& hp) {
  hp.validate();
  check_shapes(xtx, decoder);
  require_finite(decoder, "decoder");
  Precomputation pre;
  pre.xtx = std::move(xtx);
  pre.xtx_diag = pre.xtx.diagonal();
  pre.decoder = decoder;
  pre.items = sym_eig(pre.xtx);
  pre.dtd = gram(decoder);
  pre.tags = sym_eig(pre.dtd);
  pre.set_regularization(hp);
  return pre;
}

Precomputation precompute(const SparseBinaryMatrix& x, const DenseMatrix& decoder,
                          const Hyperparams& hp) {
  if (x.cols() != static_cast<std::size_t>(decoder.rows())) {
    throw ValidationError("X has " + std::to_string(x.cols()) +
                          " items but D has " + std::to_string(decoder.rows()) +
                          " rows");
  }
  return precompute_from_gram(gram(x), decoder, hp);
}

AdmmState AdmmState::Zero(std::size_t items, std::size_t tags) {
  AdmmState s;
  s.encoder = DenseMatrix::Zero(items, tags);
  s.beta = Vector::Zero(items);
  s.gamma = Vector::Zero(items);
  return s;
}

Vector update_beta(const AdmmState& state, const Precomputation& pre,
                   const Hyperparams& hp) {
  const DenseMatrix& d = pre.decoder;
  const Vector p_diag = rowwise_dot(state.encoder, d);
  const DenseMatrix ae = pre.xtx * state.encoder;
  const Vector ap_diag = rowwise_dot(ae, d);  // diag(XᵀX·E·Dᵀ)
  Vector beta = (ap_diag - pre.xtx_diag - hp.rho * state.gamma +
                 (hp.lambda1 + hp.rho) * p_diag)
                    .array() /
                (pre.xtx_diag.array() + hp.lambda1 + 2.0 * hp.rho);
  require_finite(beta, "beta update");
  return beta;
}

DenseMatrix e_update_rhs(const Vector& beta, const Vector& gamma,
                         const Precomputation& pre, const Hyperparams& hp) {
  const DenseMatrix& d = pre.decoder;
  const DenseMatrix scaled = (Vector::Ones(beta.size()) + beta).asDiagonal() * d;
  const Vector diag_terms = hp.rho * (gamma + beta) + hp.lambda1 * beta;
  DenseMatrix rhs = pre.xtx * scaled;
  rhs.noalias() += diag_terms.asDiagonal() * d;
  return rhs;
}

double sylvester_residual(const DenseMatrix& e, const DenseMatrix& rhs,
                          const Precomputation& pre, const Hyperparams& hp) {
  const DenseMatrix left = (pre.xtx * e + hp.lambda1 * e) * pre.dtd;
  const DenseMatrix residual = left + hp.lambda2 * e - rhs;
  const double scale =
      std::max(rhs.norm(), left.norm() + hp.lambda2 * e.norm());
  if (scale == 0.0) return residual.norm();
  return residual.norm() / scale;
}

DenseMatrix update_E(const AdmmState& state, const Precomputation& pre,
                     const Hyperparams& hp, double* residual_out) {
  if (pre.lambda1 != hp.lambda1 || pre.lambda2 != hp.lambda2) {
    throw ValidationError("precomputation was built for different lambdas");
  }
  const DenseMatrix rhs = e_update_rhs(state.beta, state.gamma, pre, hp);
  const DenseMatrix& u = pre.items.eigenvectors;
  const DenseMatrix& v = pre.tags.eigenvectors;
  const DenseMatrix f = u.transpose() * rhs * v;
  const DenseMatrix y = f.cwiseProduct(pre.g);
  DenseMatrix e = u * y * v.transpose();
  require_finite(e, "E update");

  double residual = std::numeric_limits<double>::quiet_NaN();
  if (hp.verify_sylvester) {
    residual = sylvester_residual(e, rhs, pre, hp);
    if (!(residual <= kSylvesterTolerance)) {
      // G holds reciprocals of η_j(μ_i + λ1) + λ2.
      const double smallest = 1.0 / pre.g.maxCoeff();
      const double largest = 1.0 / pre.g.minCoeff();
      throw NumericalError(
          "E update residual " + std::to_string(residual) + " exceeds " +
          std::to_string(kSylvesterTolerance) + "; system diagonal spans [" +
          std::to_string(smallest) + ", " + std::to_string(largest) +
          "], condition " + std::to_string(largest / smallest) + ", μ_max " +
          std::to_string(pre.items.eigenvalues.maxCoeff()) + ", η_max " +
          std::to_string(pre.tags.eigenvalues.maxCoeff()));
    }
  }
  if (residual_out) *residual_out = residual;
  return e;
}

Vector update_gamma(const AdmmState& state, const DenseMatrix& decoder) {
  Vector gamma = state.gamma + state.beta - rowwise_dot(state.encoder, decoder);
  require_finite(gamma, "gamma update");
  return gamma;
}

double objective(const DenseMatrix& e, const Vector& beta,
                 const SparseBinaryMatrix& x, const DenseMatrix& decoder,
                 const Hyperparams& hp) {
  const auto n = decoder.rows();
  const DenseMatrix p = e * decoder.transpose();
  DenseMatrix m = -p;
  m.diagonal() += Vector::Ones(n) + beta;

  double fit = 0.0;
  Eigen::RowVectorXd acc(n);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    acc.setZero();
    for (const auto i : x.row(r)) acc += m.row(i);
    fit += acc.squaredNorm();
  }
  DenseMatrix off = p;
  off.diagonal() -= beta;
  return fit + hp.lambda1 * off.squaredNorm() + hp.lambda2 * e.squaredNorm();
}

double objective_from_gram(const DenseMatrix& e, const Vector& beta,
                           const DenseMatrix& xtx, const DenseMatrix& decoder,
                           const Hyperparams& hp) {
  const Vector q = Vector::Ones(beta.size()) + beta;
  const DenseMatrix ae = xtx * e;
  const DenseMatrix dtd = decoder.transpose() * decoder;
  const DenseMatrix etae = e.transpose() * ae;
  const DenseMatrix ete = e.transpose() * e;
  const Vector p_diag = rowwise_dot(e, decoder);

  const double fit = (q.array().square() * xtx.diagonal().array()).sum() - 2.0 * q.dot(rowwise_dot(ae, decoder)) +
                     etae.cwiseProduct(dtd).sum();
  const double off = ete.cwiseProduct(dtd).sum() - 2.0 * beta.dot(p_diag) +
                     beta.squaredNorm();
  return fit + hp.lambda1 * off + hp.lambda2 * e.squaredNorm();
}

DenseMatrix objective_gradient(const DenseMatrix& e, const Vector& beta,
                               const DenseMatrix& xtx, const DenseMatrix& decoder,
                               const Hyperparams& hp) {
  const DenseMatrix dtd = decoder.transpose() * decoder;
  const Vector q = Vector::Ones(beta.size()) + beta;
  const DenseMatrix qd = q.asDiagonal() * decoder;
  const DenseMatrix bd = beta.asDiagonal() * decoder;
  return 2.0 * (-(xtx * qd) + (xtx * e + hp.lambda1 * e) * dtd -
                hp.lambda1 * bd + hp.lambda2 * e);
}

AdmmResult solve_admm(const Precomputation& pre, const Hyperparams& hp,
                      std::vector<IterationLog>* trace) {
  hp.validate();
  AdmmResult out;
  AdmmState& s = out.state;
  s = AdmmState::Zero(pre.num_items(), pre.num_tags());
  if (trace) trace->clear();

  for (std::size_t k = 1; k <= hp.max_iterations; ++k) {
    double residual = 0.0;
    s.encoder = update_E(s, pre, hp, &residual);
    s.beta = update_beta(s, pre, hp);
    Vector gamma = update_gamma(s, pre.decoder);
    s.dual_step = inf_norm(gamma - s.gamma);
    s.gamma = std::move(gamma);
    s.primal_residual = inf_norm(s.beta - rowwise_dot(s.encoder, pre.decoder));
    s.iteration = k;
    if (trace) trace->push_back({k, s.primal_residual, s.dual_step, residual});
    if (s.primal_residual <= hp.tolerance && s.dual_step <= hp.tolerance) {
      out.report.converged = true;
      break;
    }
  }

  out.report.iterations = s.iteration;
  out.report.primal_residual = s.primal_residual;
  out.report.dual_step = s.dual_step;
  out.report.objective =
      objective_from_gram(s.encoder, s.beta, pre.xtx, pre.decoder, hp);
  if (!out.report.converged) {
    spdlog::warn("ADMM stopped after {} iterations without converging "
                 "(primal residual {:.3e}, dual step {:.3e}, tolerance {:.1e})",
                 s.iteration, s.primal_residual, s.dual_step, hp.tolerance);
  }
  return out;
}

EncoderModel train(const SparseBinaryMatrix& x, const TagMatrix& tags,
                   const Hyperparams& hp, std::vector<IterationLog>* trace) {
  if (x.cols() != tags.num_items()) {
    throw ValidationError("interactions have " + std::to_string(x.cols()) +
                          " items, tag matrix has " +
                          std::to_string(tags.num_items()));
  }
  const Precomputation pre = precompute(x, tags.dense(), hp);
  AdmmResult result = solve_admm(pre, hp, trace);
  EncoderModel model;
  model.encoder = std::move(result.state.encoder);
  model.vocabulary = tags.vocabulary;
  model.hyperparams = hp;
  model.report = result.report;
  return model;
}

}  // namespace tease
