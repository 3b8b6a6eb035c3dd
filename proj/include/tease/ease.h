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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tease/linalg.h"

namespace tease {

// Closed-form EASE item-item weights with a zero diagonal.
struct ItemItemModel {
  DenseMatrix weights;  // B, n × n
  double lambda = 0.0;
  std::vector<std::string> item_ids;  // may be empty

  std::size_t num_items() const { return static_cast<std::size_t>(weights.rows()); }
};

// P = (XᵀX + λI)⁻¹, B = I − P·dm(1/diag(P)), diag(B) = 0. Cubic in the item
// count and needs two dense n × n matrices.
ItemItemModel train_ease(const SparseBinaryMatrix& x, double lambda);
ItemItemModel train_ease_from_gram(const DenseMatrix& xtx, double lambda);

// xᵀB for the binary history row x.
Vector score_ease(std::span<const std::uint32_t> history,
                  const ItemItemModel& model);

}  // namespace tease
