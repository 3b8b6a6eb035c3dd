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

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "tease/dataset.h"
#include "tease/ease.h"
#include "tease/recommend.h"
#include "tease/solver.h"

namespace tease {

struct DataOptions {
  std::filesystem::path interactions;
  std::filesystem::path metadata;
  std::optional<std::filesystem::path> bins;
  std::size_t min_items_per_tag = 5;
  SplitSpec split;
  // Train on every user instead of the training part of the split.
  bool all_users = false;
};

// Ingested data with the split and the tag matrix. Popularity is counted on
// the training interactions.
struct PreparedData {
  InteractionDataset dataset;
  ItemMetadata metadata;
  TagConfig tag_config;
  FilterReport filtered;
  DataSplit split;
  std::shared_ptr<TagMatrix> tags;

  const SparseBinaryMatrix& training() const;
  const SparseBinaryMatrix& all_interactions() const { return dataset.interactions; }
  bool all_users = false;
};

PreparedData prepare_data(const DataOptions& options);

EncoderModel train_encoder(const PreparedData& data, const Hyperparams& hp);
ItemItemModel train_item_model(const PreparedData& data, double lambda);

// Checks that the model was trained on this data's items and vocabulary.
void check_compatible(const EncoderModel& model, const PreparedData& data);
void check_compatible(const ItemItemModel& model, const PreparedData& data);

std::shared_ptr<const Recommender> make_recommender(
    const PreparedData& data, EncoderModel model,
    std::optional<ItemItemModel> item_model = std::nullopt);

}  // namespace tease
