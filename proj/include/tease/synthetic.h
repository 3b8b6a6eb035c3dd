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

#include "tease/dataset.h"

namespace tease {

// Users whose interactions concentrate on a few preferred tags.
struct SyntheticConfig {
  std::size_t users = 200;
  std::size_t items = 100;
  std::size_t tags = 20;
  std::size_t preferred_tags = 2;
  std::size_t tags_per_item = 2;
  double preferred_rate = 0.5;  // chance of taking each matching item
  double noise_rate = 0.02;     // chance of taking any other item
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticData {
  InteractionDataset interactions;
  ItemMetadata metadata;  // "genre" tags plus a "title" per item
  std::vector<std::vector<std::uint32_t>> preferred;  // per user, tag indices
};

// Item i always carries tag i mod tags plus random extra tags. Users with
// no interactions are dropped.
SyntheticData make_planted_preferences(const SyntheticConfig& config);

}  // namespace tease
