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

#include "tease/synthetic.h"

#include <algorithm>
#include <cstdio>

#include "tease/errors.h"
#include "tease/random.h"

namespace tease {

void SyntheticConfig::validate() const {
  if (users == 0 || items == 0 || tags == 0) throw ValidationError("empty synthetic shape");
  if (preferred_tags == 0 || preferred_tags > tags) {
    throw ValidationError("preferred_tags must be in [1, tags]");
  }
  if (tags_per_item == 0 || tags_per_item > tags) {
    throw ValidationError("tags_per_item must be in [1, tags]");
  }
  if (!(preferred_rate > 0.0 && preferred_rate <= 1.0) || !(noise_rate >= 0.0 && noise_rate <= 1.0)) {
    throw ValidationError("synthetic rates must be probabilities");
  }
}

namespace {

std::string numbered(char prefix, std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%04zu", prefix, k);
  return buf;
}

std::vector<std::uint32_t> distinct_sample(std::size_t population, std::size_t count, Rng& rng) {
  std::vector<std::uint32_t> all(population);
  for (std::size_t k = 0; k < population; ++k) all[k] = static_cast<std::uint32_t>(k);
  shuffle(std::span<std::uint32_t>(all), rng);
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

SyntheticData make_planted_preferences(const SyntheticConfig& config) {
  config.validate();
  Rng rng(config.seed);
  std::vector<std::vector<std::uint32_t>> item_tags(config.items);
  for (std::size_t i = 0; i < config.items; ++i) {
    auto& tags = item_tags[i];
    tags.push_back(static_cast<std::uint32_t>(i % config.tags));
    while (tags.size() < config.tags_per_item) {
      const auto t = static_cast<std::uint32_t>(uniform_below(rng, config.tags));
      if (std::find(tags.begin(), tags.end(), t) == tags.end()) tags.push_back(t);
    }
    std::sort(tags.begin(), tags.end());
  }

  SyntheticData out;
  std::vector<std::string> user_ids;
  std::vector<std::vector<std::uint32_t>> rows;
  for (std::size_t u = 0; u < config.users; ++u) {
    const auto preferred = distinct_sample(config.tags, config.preferred_tags, rng);
    std::vector<std::uint32_t> row;
    for (std::size_t i = 0; i < config.items; ++i) {
      bool match = false;
      for (const auto t : item_tags[i]) {
        match |= std::binary_search(preferred.begin(), preferred.end(), t);
      }
      if (uniform_unit(rng) < (match ? config.preferred_rate : config.noise_rate)) {
        row.push_back(static_cast<std::uint32_t>(i));
      }
    }
    if (row.empty()) continue;
    user_ids.push_back(numbered('u', u));
    rows.push_back(std::move(row));
    out.preferred.push_back(preferred);
  }

  std::vector<std::string> item_ids;
  for (std::size_t i = 0; i < config.items; ++i) {
    item_ids.push_back(numbered('i', i));
    out.metadata.rows.push_back({item_ids.back(), "title", "Item " + std::to_string(i), 0});
    for (const auto t : item_tags[i]) {
      out.metadata.rows.push_back({item_ids.back(), "genre", numbered('g', t), 0});
    }
  }
  out.metadata.reindex();
  out.interactions = InteractionDataset::FromParts(
      std::move(user_ids), std::move(item_ids),
      SparseBinaryMatrix::FromRows(config.items, rows));
  return out;
}

}  // namespace tease
