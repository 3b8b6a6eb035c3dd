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

#include "tease/recommend.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tease/errors.h"

namespace tease {

UserState UserState::Empty(std::size_t num_tags) {
  UserState s;
  s.clicks.assign(num_tags, 0);
  return s;
}

bool UserState::in_history(std::uint32_t item) const {
  return std::find(history.begin(), history.end(), item) != history.end();
}

UserState add_history(UserState state, std::uint32_t item) {
  if (state.in_history(item)) {
    throw ValidationError("item " + std::to_string(item) + " already in history");
  }
  state.history.push_back(item);
  return state;
}

UserState remove_history(UserState state, std::uint32_t item) {
  const auto it = std::find(state.history.begin(), state.history.end(), item);
  if (it == state.history.end()) {
    throw NotFoundError("item " + std::to_string(item) + " not in history");
  }
  state.history.erase(it);
  return state;
}

UserState apply_feedback(UserState state, std::size_t tag, int delta) {
  if (tag >= state.clicks.size()) {
    throw ValidationError("tag " + std::to_string(tag) + " out of range [0, " +
                          std::to_string(state.clicks.size()) + ")");
  }
  if (delta != 1 && delta != -1) throw ValidationError("feedback delta must be +1 or -1");
  state.clicks[tag] = std::clamp(state.clicks[tag] + delta, -kMaxClicks, kMaxClicks);
  return state;
}

double certainty(std::size_t history_length) {
  return std::min(0.2 + 0.2 * static_cast<double>(history_length), 0.8);
}

namespace {

double max_abs(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

}  // namespace

TagProfile profile(const UserState& state, const DenseMatrix& encoder) {
  const auto t = encoder.cols();
  if (static_cast<Eigen::Index>(state.clicks.size()) != t) {
    throw ValidationError("state has " + std::to_string(state.clicks.size()) +
                          " tags, model has " + std::to_string(t));
  }
  TagProfile p;
  p.certainty = certainty(state.history.size());
  p.raw = Vector::Zero(t);
  for (const auto item : state.history) {
    if (item >= encoder.rows()) {
      throw ValidationError("history item " + std::to_string(item) + " out of range");
    }
    p.raw += encoder.row(item).transpose();
  }
  const double learned_scale = max_abs(p.raw);
  const double to_raw = learned_scale > 0.0 ? learned_scale / p.certainty : 1.0;
  for (Eigen::Index k = 0; k < t; ++k) {
    if (state.clicks[k] != 0) p.raw[k] += state.feedback(k) * to_raw;
  }
  const double scale = max_abs(p.raw);
  p.display = scale > 0.0 ? Vector(p.raw * (p.certainty / scale)) : Vector::Zero(t);
  return p;
}

Vector score_items(const Vector& raw, const TagMatrix& tags) {
  if (static_cast<std::size_t>(raw.size()) != tags.num_tags()) {
    throw ValidationError("profile length does not match tag count");
  }
  const double pop = raw[tags.popularity_tag()];
  Vector out(tags.num_items());
  for (std::size_t i = 0; i < tags.num_items(); ++i) {
    double s = 0.0;
    for (const auto tag : tags.binary.row(i)) s += raw[tag];
    out[i] = s + pop * tags.popularity[i];
  }
  return out;
}

ItemExplanation explanation_terms(const Vector& raw, const TagMatrix& tags,
                                  std::size_t item) {
  if (item >= tags.num_items()) {
    throw ValidationError("item " + std::to_string(item) + " out of range");
  }
  ItemExplanation out;
  auto add = [&](std::size_t tag, double value) {
    const double term = raw[tag] * value;
    if (term != 0.0) out.terms.push_back({tag, 0.0, term});
  };
  for (const auto tag : tags.binary.row(item)) add(tag, 1.0);
  add(tags.popularity_tag(), tags.popularity[item]);
  for (const auto& e : out.terms) out.normalizer += std::abs(e.term);
  for (auto& e : out.terms) e.percent = 100.0 * e.term / out.normalizer;
  std::stable_sort(out.terms.begin(), out.terms.end(),
                   [](const Explanation& a, const Explanation& b) {
                     return std::abs(a.percent) > std::abs(b.percent);
                   });
  return out;
}

std::vector<Explanation> ItemExplanation::shown() const {
  std::vector<Explanation> out;
  for (const auto& e : terms) {
    if (out.size() == kMaxExplanations) break;
    if (std::abs(e.percent) < kMinExplanationPercent) break;
    out.push_back(e);
  }
  return out;
}

std::vector<Explanation> explain_item(const Vector& raw, const TagMatrix& tags,
                                      std::size_t item) {
  return explanation_terms(raw, tags, item).shown();
}

std::vector<double> category_impact(const Vector& display, const TagMatrix& tags) {
  const std::size_t nc = tags.categories.size();
  if (nc == 0) throw ValidationError("no tag categories");
  std::vector<double> out(nc, 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < tags.num_tags(); ++k) {
    out[tags.tag_category[k]] += std::abs(display[k]);
    total += std::abs(display[k]);
  }
  if (total == 0.0) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(nc));
  } else {
    for (auto& v : out) v /= total;
  }
  return out;
}

Vector ensemble_scores(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw ValidationError("ensemble inputs differ in length");
  return (a.cwiseMax(0.0).array() * b.cwiseMax(0.0).array()).sqrt().matrix();
}

std::vector<std::uint32_t> top_k(const Vector& scores,
                                 std::span<const std::uint32_t> exclude,
                                 std::size_t k) {
  std::vector<char> skip(scores.size(), 0);
  for (const auto i : exclude) {
    if (i < skip.size()) skip[i] = 1;
  }
  std::vector<std::uint32_t> idx;
  idx.reserve(scores.size());
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (!skip[i] && std::isfinite(scores[i])) idx.push_back(static_cast<std::uint32_t>(i));
  }
  const auto better = [&](std::uint32_t a, std::uint32_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
  idx.resize(k);
  return idx;
}

Recommender::Recommender(std::shared_ptr<const EncoderModel> encoder,
                         std::shared_ptr<const TagMatrix> tags,
                         std::shared_ptr<const ItemItemModel> item_model)
    : encoder_(std::move(encoder)), tags_(std::move(tags)), item_model_(std::move(item_model)) {
  if (!encoder_ || !tags_) throw ValidationError("recommender needs an encoder and tags");
  if (encoder_->num_items() != tags_->num_items() ||
      encoder_->num_tags() != tags_->num_tags()) {
    throw ValidationError("encoder is " + std::to_string(encoder_->num_items()) + "x" +
                          std::to_string(encoder_->num_tags()) + " but tags are " +
                          std::to_string(tags_->num_items()) + "x" +
                          std::to_string(tags_->num_tags()));
  }
  if (item_model_ && item_model_->num_items() != tags_->num_items()) {
    throw ValidationError("item model covers " + std::to_string(item_model_->num_items()) +
                          " items, tags cover " + std::to_string(tags_->num_items()));
  }
}

const ItemItemModel& Recommender::item_model() const {
  if (!item_model_) throw UnavailableError("item-item model not loaded");
  return *item_model_;
}

void Recommender::check(const UserState& state) const {
  if (state.clicks.size() != num_tags()) {
    throw ValidationError("state has " + std::to_string(state.clicks.size()) +
                          " tags, model has " + std::to_string(num_tags()));
  }
  for (const auto i : state.history) {
    if (i >= num_items()) throw ValidationError("history item " + std::to_string(i) + " out of range");
  }
}

TagProfile Recommender::profile(const UserState& state) const {
  check(state);
  return tease::profile(state, encoder_->encoder);
}

Vector Recommender::scores(const UserState& state, ScoringMode mode) const {
  check(state);
  switch (mode) {
    case ScoringMode::kEncoder:
      return score_items(profile(state).raw, *tags_);
    case ScoringMode::kEase:
      return score_ease(state.history, item_model());
    case ScoringMode::kEnsemble: {
      const auto& b = item_model();
      return ensemble_scores(score_items(profile(state).raw, *tags_),
                             score_ease(state.history, b));
    }
  }
  throw ValidationError("unknown scoring mode");
}

std::vector<RankedRecommendation> Recommender::recommend(const UserState& state,
                                                         std::size_t k,
                                                         ScoringMode mode) const {
  if (k == 0) throw ValidationError("k must be at least 1");
  check(state);
  const TagProfile p = profile(state);
  const Vector encoder_scores = score_items(p.raw, *tags_);
  Vector ranking;
  switch (mode) {
    case ScoringMode::kEncoder: ranking = encoder_scores; break;
    case ScoringMode::kEase: ranking = score_ease(state.history, item_model()); break;
    case ScoringMode::kEnsemble:
      ranking = ensemble_scores(encoder_scores, score_ease(state.history, item_model()));
      break;
  }
  const auto order = top_k(ranking, state.history, k);
  const double best = order.empty() ? 0.0 : ranking[order.front()];
  std::vector<RankedRecommendation> out;
  out.reserve(order.size());
  for (const auto i : order) {
    RankedRecommendation r;
    r.item = i;
    r.score = ranking[i];
    r.encoder_score = encoder_scores[i];
    r.percent_match = best > 0.0 ? 100.0 * std::max(ranking[i], 0.0) / best : 0.0;
    r.explanations = explain_item(p.raw, *tags_, i);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace tease
