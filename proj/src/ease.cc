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

#include "tease/ease.h"

#include <cmath>
#include <string>

#include "tease/errors.h"

namespace tease {

ItemItemModel train_ease_from_gram(const DenseMatrix& xtx, double lambda) {
  if (!std::isfinite(lambda) || lambda <= 0.0) {
    throw ValidationError("EASE lambda must be finite and > 0");
  }
  if (xtx.rows() != xtx.cols() || xtx.rows() == 0) {
    throw ValidationError("EASE needs a non-empty square Gram matrix");
  }
  const auto n = xtx.rows();
  DenseMatrix reg = xtx;
  reg.diagonal().array() += lambda;
  Eigen::LLT<DenseMatrix> llt(reg);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("XᵀX + λI is not positive definite");
  }
  const DenseMatrix p = llt.solve(DenseMatrix::Identity(n, n));

  ItemItemModel model;
  model.lambda = lambda;
  model.weights.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      model.weights(i, j) = -p(i, j) / p(j, j);
    }
    model.weights(i, i) = 0.0;
  }
  require_finite(model.weights, "EASE weights");
  return model;
}

ItemItemModel train_ease(const SparseBinaryMatrix& x, double lambda) {
  return train_ease_from_gram(gram(x), lambda);
}

Vector score_ease(std::span<const std::uint32_t> history,
                  const ItemItemModel& model) {
  Vector scores = Vector::Zero(model.weights.cols());
  for (const auto i : history) {
    if (i >= model.num_items()) {
      throw ValidationError("history item " + std::to_string(i) +
                            " out of range");
    }
    scores += model.weights.row(i).transpose();
  }
  return scores;
}

}  // namespace tease
