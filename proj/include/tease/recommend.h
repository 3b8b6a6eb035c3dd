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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tease/dataset.h"
#include "tease/ease.h"
#include "tease/linalg.h"
#include "tease/solver.h"

namespace tease {

inline constexpr double kClickStep = 0.2;  // display units per click
inline constexpr int kMaxClicks = 5;
inline constexpr std::size_t kMaxExplanations = 5;
inline constexpr double kMinExplanationPercent = 5.0;

struct UserState {
  std::vector<std::uint32_t> history;  // ordered, unique
  std::vector<int> clicks;             // per tag, in [-kMaxClicks, kMaxClicks]

  static UserState Empty(std::size_t num_tags);

  bool in_history(std::uint32_t item) const;
  // Feedback in display units.
  double feedback(std::size_t tag) const { return clicks[tag] * kClickStep; }
  bool operator==(const UserState&) const = default;
};

// Returns the state with `item` appended. Throws ValidationError when the
// item is already present.
UserState add_history(UserState state, std::uint32_t item);
// Throws NotFoundError when the item is absent.
UserState remove_history(UserState state, std::uint32_t item);

// delta is +1 or -1; the count saturates at ±kMaxClicks.
UserState apply_feedback(UserState state, std::size_t tag, int delta);

// c = min(0.2 + 0.2h, 0.8)
double certainty(std::size_t history_length);

struct TagProfile {
  Vector raw;      // x·E plus converted feedback
  Vector display;  // in [-certainty, certainty]
  double certainty = 0.0;
};

TagProfile profile(const UserState& state, const DenseMatrix& encoder);

// ⟨raw, S_i⟩ for every item.
Vector score_items(const Vector& raw, const TagMatrix& tags);

struct Explanation {
  std::size_t tag = 0;
  double percent = 0.0;  // signed
  double term = 0.0;     // raw affinity × tag value
};

struct ItemExplanation {
  double normalizer = 0.0;          // Σ|term|
  std::vector<Explanation> terms;   // every nonzero term, by |percent| desc

  // Top kMaxExplanations terms with |percent| ≥ kMinExplanationPercent.
  std::vector<Explanation> shown() const;
};

ItemExplanation explanation_terms(const Vector& raw, const TagMatrix& tags,
                                  std::size_t item);
std::vector<Explanation> explain_item(const Vector& raw, const TagMatrix& tags,
                                      std::size_t item);

// Share of Σ|display| per category, in the order of tags.categories.
std::vector<double> category_impact(const Vector& display, const TagMatrix& tags);

// sqrt(max(a,0)·max(b,0))
Vector ensemble_scores(const Vector& a, const Vector& b);

// Indices of the k best finite scores, excluding `exclude`; ties go to the
// lower index.
std::vector<std::uint32_t> top_k(const Vector& scores,
                                 std::span<const std::uint32_t> exclude,
                                 std::size_t k);

enum class ScoringMode { kEncoder, kEase, kEnsemble };

struct RankedRecommendation {
  std::uint32_t item = 0;
  double score = 0.0;         // ranking score
  double encoder_score = 0.0;  // explanations re-sum to this
  double percent_match = 0.0;
  std::vector<Explanation> explanations;
};

class Recommender {
 public:
  Recommender(std::shared_ptr<const EncoderModel> encoder,
              std::shared_ptr<const TagMatrix> tags,
              std::shared_ptr<const ItemItemModel> item_model = nullptr);

  const EncoderModel& encoder() const { return *encoder_; }
  const TagMatrix& tags() const { return *tags_; }
  bool has_item_model() const { return item_model_ != nullptr; }
  const ItemItemModel& item_model() const;
  std::size_t num_items() const { return tags_->num_items(); }
  std::size_t num_tags() const { return tags_->num_tags(); }

  UserState empty_state() const { return UserState::Empty(num_tags()); }
  TagProfile profile(const UserState& state) const;
  Vector scores(const UserState& state, ScoringMode mode) const;
  std::vector<RankedRecommendation> recommend(const UserState& state,
                                              std::size_t k,
                                              ScoringMode mode) const;

 private:
  void check(const UserState& state) const;

  std::shared_ptr<const EncoderModel> encoder_;
  std::shared_ptr<const TagMatrix> tags_;
  std::shared_ptr<const ItemItemModel> item_model_;
};

}  // namespace tease
