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

#include "tease/pipeline.h"

#include <spdlog/spdlog.h>

#include "tease/errors.h"

namespace tease {

const SparseBinaryMatrix& PreparedData::training() const {
  return all_users ? dataset.interactions : split.train;
}

PreparedData prepare_data(const DataOptions& options) {
  PreparedData out;
  out.all_users = options.all_users;
  out.metadata = load_metadata(options.metadata);
  out.tag_config.min_items_per_tag = options.min_items_per_tag;
  if (options.bins) out.tag_config.bins = load_binning_rules(*options.bins);
  out.dataset = drop_untaggable(load_interactions(options.interactions), out.metadata,
                                out.tag_config, &out.filtered);
  out.split = split_strong_generalization(out.dataset, options.split);
  out.tags = std::make_shared<TagMatrix>(
      encode_tags(out.metadata, out.dataset, out.training(), out.tag_config));
  spdlog::info("{} users, {} items, {} tags, {} interactions; {} training users",
               out.dataset.num_users(), out.dataset.num_items(), out.tags->num_tags(),
               out.dataset.interactions.nnz(), out.training().rows());
  return out;
}

EncoderModel train_encoder(const PreparedData& data, const Hyperparams& hp) {
  EncoderModel model = train(data.training(), *data.tags, hp);
  model.item_ids = data.dataset.item_ids;
  if (!model.report.converged) {
    spdlog::warn("ADMM stopped after {} iterations without converging (primal {:.3g})",
                 model.report.iterations, model.report.primal_residual);
  }
  return model;
}

ItemItemModel train_item_model(const PreparedData& data, double lambda) {
  ItemItemModel model = train_ease(data.training(), lambda);
  model.item_ids = data.dataset.item_ids;
  return model;
}

void check_compatible(const EncoderModel& model, const PreparedData& data) {
  if (model.item_ids != data.dataset.item_ids) {
    throw ValidationError("model items do not match the ingested data; use the same data options");
  }
  if (model.vocabulary != data.tags->vocabulary) {
    throw ValidationError("model tags do not match the ingested data; use the same data options");
  }
}

void check_compatible(const ItemItemModel& model, const PreparedData& data) {
  if (model.item_ids != data.dataset.item_ids) {
    throw ValidationError("item-item model items do not match the ingested data");
  }
}

std::shared_ptr<const Recommender> make_recommender(const PreparedData& data,
                                                    EncoderModel model,
                                                    std::optional<ItemItemModel> item_model) {
  check_compatible(model, data);
  std::shared_ptr<const ItemItemModel> ease;
  if (item_model) {
    check_compatible(*item_model, data);
    ease = std::make_shared<ItemItemModel>(std::move(*item_model));
  }
  return std::make_shared<Recommender>(std::make_shared<EncoderModel>(std::move(model)),
                                       data.tags, ease);
}

}  // namespace tease
