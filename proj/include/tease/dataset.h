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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "tease/linalg.h"

namespace tease {

// Implicit-feedback interactions with dense user/item indices assigned in
// first-seen order.
struct InteractionDataset {
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::unordered_map<std::string, std::uint32_t> user_index;
  std::unordered_map<std::string, std::uint32_t> item_index;
  SparseBinaryMatrix interactions;  // users × items

  std::size_t num_users() const { return user_ids.size(); }
  std::size_t num_items() const { return item_ids.size(); }

  // Builds the id maps from the id lists. Ids must be unique.
  static InteractionDataset FromParts(std::vector<std::string> user_ids,
                                      std::vector<std::string> item_ids,
                                      SparseBinaryMatrix interactions);
};

// Reads `user_id,item_id` CSV (header required). `source` names the input in
// error messages.
InteractionDataset load_interactions(std::istream& in,
                                     const std::string& source = "<stream>");
InteractionDataset load_interactions(const std::filesystem::path& path);

struct MetadataRow {
  std::string item_id;
  std::string category;
  std::string value;
  std::size_t line = 0;
};

// `item_id,category,value` rows in file order; multi-valued categories are
// repeated rows.
struct ItemMetadata {
  std::vector<MetadataRow> rows;

  // Rebuilds the per-item lookup; call after editing `rows`.
  void reindex();

  bool has_item(const std::string& item_id) const;
  // Row indices for the item, in file order.
  const std::vector<std::size_t>& rows_of(const std::string& item_id) const;
  // First value of `category` for the item, if any.
  const std::string* find(const std::string& item_id,
                          const std::string& category) const;

 private:
  std::unordered_map<std::string, std::vector<std::size_t>> by_item_;
};

ItemMetadata load_metadata(std::istream& in,
                           const std::string& source = "<stream>");
ItemMetadata load_metadata(const std::filesystem::path& path);

// Numeric categories and their ascending bin edges. A value v falls in bin
// j when edge[j-1] <= v < edge[j].
using BinningRules = std::map<std::string, std::vector<double>>;

// Text format, one rule per line:  `year = 1990, 2000, 2010`
// Blank lines and lines starting with '#' are ignored.
BinningRules parse_binning_rules(std::istream& in,
                                 const std::string& source = "<stream>");
BinningRules load_binning_rules(const std::filesystem::path& path);

struct TagConfig {
  BinningRules bins;
  // Tags carried by fewer items are dropped.
  std::size_t min_items_per_tag = 5;
  // Categories used for display only, never encoded as tags.
  std::vector<std::string> display_categories{"title", "description"};
};

struct Tag {
  std::string category;
  std::string label;
  bool operator==(const Tag&) const = default;
};

inline constexpr const char* kPopularityCategory = "popularity";

// One-hot item metadata S plus the popularity column. The decoder used in
// training is [binary | popularity], so the popularity tag is always the last
// column and the last vocabulary entry.
struct TagMatrix {
  SparseBinaryMatrix binary;       // items × binary tags
  std::vector<double> popularity;  // per item, max exactly 1
  std::vector<Tag> vocabulary;     // binary tags, then popularity
  std::vector<std::string> categories;
  std::vector<std::uint32_t> tag_category;  // per tag, index into categories

  std::size_t num_items() const { return binary.rows(); }
  std::size_t num_binary_tags() const { return binary.cols(); }
  std::size_t num_tags() const { return binary.cols() + 1; }
  std::size_t popularity_tag() const { return binary.cols(); }

  double value(std::size_t item, std::size_t tag) const;
  // n × t dense decoder.
  DenseMatrix dense() const;
  // Tag index for (category, label); throws NotFoundError.
  std::size_t find_tag(const std::string& category,
                       const std::string& label) const;
};

// One-hot encodes metadata for the items of `ds`. Popularity comes from the
// column counts of `counts` (pass the training matrix to avoid leakage).
// Throws ValidationError when an item lacks metadata or ends up without tags.
TagMatrix encode_tags(const ItemMetadata& metadata,
                      const InteractionDataset& ds,
                      const SparseBinaryMatrix& counts,
                      const TagConfig& config);
TagMatrix encode_tags(const ItemMetadata& metadata,
                      const InteractionDataset& ds, const TagConfig& config);

struct FilterReport {
  std::vector<std::string> dropped_items;
  std::vector<std::string> dropped_users;
};

// Removes items that would carry no tag after frequency filtering (or have no
// metadata at all), then users left without interactions, repeating until
// stable. Each drop is logged as a warning.
InteractionDataset drop_untaggable(const InteractionDataset& ds,
                                   const ItemMetadata& metadata,
                                   const TagConfig& config,
                                   FilterReport* report = nullptr);

struct SplitSpec {
  double train_fraction = 0.8;
  double validation_fraction = 0.1;
  double test_fraction = 0.1;
  std::size_t min_interactions = 5;
  double history_fraction = 0.8;
  std::uint64_t seed = 42;

  void validate() const;
};

struct EvaluationUser {
  std::uint32_t user = 0;  // index in the source dataset
  std::vector<std::uint32_t> history;
  std::vector<std::uint32_t> truth;
};

struct EvaluationSplit {
  std::vector<EvaluationUser> users;
};

struct DataSplit {
  SparseBinaryMatrix train;  // rows = train_users, all items as columns
  std::vector<std::uint32_t> train_users;
  EvaluationSplit validation;
  EvaluationSplit test;
};

// Strong generalization: validation and test users are disjoint from the
// training users, and each evaluation user's items are split into history
// (ceil(history_fraction·count)) and ground truth.
DataSplit split_strong_generalization(const InteractionDataset& ds,
                                      const SplitSpec& spec);

// Stable FNV-1a hash over the interaction pattern and ids.
std::uint64_t dataset_hash(const InteractionDataset& ds);

}  // namespace tease
