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
#include <cstring>
#include <random>

#include "gtest/gtest.h"
#include "oracles.h"
#include "tease/errors.h"

namespace tease {
namespace {

// Tags: binary columns from `rows`, each in category c<k % categories>, plus
// popularity.
TagMatrix make_tags(std::size_t num_binary,
                    const std::vector<std::vector<std::uint32_t>>& rows,
                    std::vector<double> popularity, std::size_t categories = 2) {
  TagMatrix t;
  t.binary = SparseBinaryMatrix::FromRows(num_binary, rows);
  t.popularity = std::move(popularity);
  for (std::size_t c = 0; c < categories; ++c) t.categories.push_back("c" + std::to_string(c));
  for (std::size_t k = 0; k < num_binary; ++k) {
    t.vocabulary.push_back({t.categories[k % categories], "t" + std::to_string(k)});
    t.tag_category.push_back(static_cast<std::uint32_t>(k % categories));
  }
  t.categories.push_back(kPopularityCategory);
  t.vocabulary.push_back({kPopularityCategory, kPopularityCategory});
  t.tag_category.push_back(static_cast<std::uint32_t>(categories));
  return t;
}

TagMatrix random_tags(std::mt19937_64& rng, std::size_t n, std::size_t binary) {
  std::vector<std::vector<std::uint32_t>> rows(n);
  std::vector<double> pop(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint32_t k = 0; k < binary; ++k) {
      if (unit(rng) < 0.3) rows[i].push_back(k);
    }
    if (rows[i].empty()) rows[i].push_back(static_cast<std::uint32_t>(rng() % binary));
    pop[i] = unit(rng);
  }
  pop[rng() % n] = 1.0;
  return make_tags(binary, rows, pop, 3);
}

DenseMatrix random_encoder(std::mt19937_64& rng, std::size_t n, std::size_t t) {
  std::normal_distribution<double> normal;
  DenseMatrix e(n, t);
  for (Eigen::Index k = 0; k < e.size(); ++k) e.data()[k] = normal(rng);
  return e;
}

TEST(CertaintyTest, RampsFromPointTwoToPointEight) {
  EXPECT_DOUBLE_EQ(certainty(0), 0.2);
  EXPECT_DOUBLE_EQ(certainty(1), 0.4);
  EXPECT_DOUBLE_EQ(certainty(2), 0.6);
  EXPECT_DOUBLE_EQ(certainty(3), 0.8);
  EXPECT_DOUBLE_EQ(certainty(50), 0.8);
}

TEST(ProfileTest, Examples) {
  DenseMatrix e(3, 2);
  e << 1, -2, 0.5, 0.5, 3, 1;
  auto s = UserState::Empty(2);
  auto p = profile(s, e);
  EXPECT_EQ(p.raw, Vector::Zero(2));
  EXPECT_EQ(p.display, Vector::Zero(2));
  EXPECT_DOUBLE_EQ(p.certainty, 0.2);

  s.history = {0};
  p = profile(s, e);
  EXPECT_EQ(p.raw, Vector(e.row(0).transpose()));
  EXPECT_DOUBLE_EQ(p.certainty, 0.4);
  EXPECT_DOUBLE_EQ(p.display[1], -0.4);
  EXPECT_DOUBLE_EQ(p.display[0], 0.2);

  s.history = {0, 1, 2};
  p = profile(s, e);
  EXPECT_DOUBLE_EQ(p.certainty, 0.8);
  EXPECT_DOUBLE_EQ(p.raw[0], 4.5);
  EXPECT_DOUBLE_EQ(p.raw[1], -0.5);
}

TEST(ProfileTest, DisplayPreservesOrderAndRange) {
  std::mt19937_64 rng(5);
  const DenseMatrix e = random_encoder(rng, 12, 7);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = UserState::Empty(7);
    for (std::uint32_t i = 0; i < 12; ++i) {
      if (rng() % 3 == 0) s.history.push_back(i);
    }
    for (int c = 0; c < 4; ++c) s = apply_feedback(s, rng() % 7, rng() % 2 ? 1 : -1);
    const auto p = profile(s, e);
    EXPECT_LE(p.display.cwiseAbs().maxCoeff(), p.certainty + 1e-15);
    if (p.raw.cwiseAbs().maxCoeff() > 0) {
      EXPECT_NEAR(p.display.cwiseAbs().maxCoeff(), p.certainty, 1e-15);
    }
    for (int a = 0; a < 7; ++a) {
      for (int b = 0; b < 7; ++b) {
        if (p.raw[a] < p.raw[b]) EXPECT_LE(p.display[a], p.display[b]);
      }
    }
  }
}

TEST(ProfileTest, ThreeClicksOnZeroTagLandJustBelowTheTop) {
  DenseMatrix e(3, 3);
  e << 1, 0, 0.5, 1, 0, -0.5, 0, 0, 1;
  auto s = UserState::Empty(3);
  s.history = {0, 1, 2};  // raw = (2, 0, 1), c = 0.8
  for (int i = 0; i < 3; ++i) s = apply_feedback(s, 1, +1);
  const auto p = profile(s, e);
  EXPECT_NEAR(p.display[0], 0.8, 1e-15);
  EXPECT_NEAR(p.display[1], 0.6, 1e-15);
  EXPECT_NEAR(p.display[2], 0.4, 1e-15);
}

TEST(ProfileTest, ColdFeedbackConvertsWithUnitFactor) {
  const DenseMatrix e = DenseMatrix::Ones(2, 2);
  auto s = apply_feedback(UserState::Empty(2), 1, +1);
  const auto p = profile(s, e);
  EXPECT_DOUBLE_EQ(p.raw[1], 0.2);
  EXPECT_DOUBLE_EQ(p.display[1], 0.2);
  EXPECT_DOUBLE_EQ(p.raw[0], 0.0);
}

TEST(FeedbackTest, InverseClampAndValidation) {
  auto s = UserState::Empty(3);
  const auto before = s;
  s = apply_feedback(apply_feedback(s, 2, +1), 2, -1);
  EXPECT_EQ(s, before);
  for (int i = 0; i < 6; ++i) s = apply_feedback(s, 0, +1);
  EXPECT_EQ(s.clicks[0], 5);
  EXPECT_DOUBLE_EQ(s.feedback(0), 1.0);
  for (int i = 0; i < 12; ++i) s = apply_feedback(s, 0, -1);
  EXPECT_DOUBLE_EQ(s.feedback(0), -1.0);
  EXPECT_THROW(apply_feedback(s, 3, +1), ValidationError);
  EXPECT_THROW(apply_feedback(s, 0, 2), ValidationError);
}

TEST(HistoryTest, AddRemove) {
  auto s = add_history(UserState::Empty(1), 4);
  EXPECT_THROW(add_history(s, 4), ValidationError);
  EXPECT_THROW(remove_history(s, 5), NotFoundError);
  EXPECT_TRUE(remove_history(s, 4).history.empty());
}

TEST(ScoreItemsTest, Examples) {
  const auto tags = make_tags(3, {{0, 1}, {1}, {2}, {0, 2}}, {1.0, 0.5, 0.25, 0.0});
  Vector onehot = Vector::Zero(4);
  onehot[2] = 1.0;
  EXPECT_EQ(score_items(onehot, tags), (Vector(4) << 0, 0, 1, 1).finished());
  EXPECT_EQ(score_items(Vector::Zero(4), tags), Vector::Zero(4));
  const Vector both = (Vector(4) << 1, 1, 0, 0).finished();
  EXPECT_DOUBLE_EQ(score_items(both, tags)[0], 2.0);
  Vector pop = Vector::Zero(4);
  pop[3] = 2.0;
  EXPECT_EQ(score_items(pop, tags), (Vector(4) << 2, 1, 0.5, 0).finished());
  EXPECT_THROW(score_items(Vector::Zero(3), tags), ValidationError);
}

TEST(ScoreItemsTest, MatchesDenseProduct) {
  std::mt19937_64 rng(8);
  const auto tags = random_tags(rng, 30, 9);
  std::normal_distribution<double> normal;
  Vector raw(10);
  for (auto& v : raw) v = normal(rng);
  EXPECT_LE((score_items(raw, tags) - tags.dense() * raw).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(ExplainTest, Examples) {
  const auto tags = make_tags(6, {{0}, {0, 1, 2}, {0, 1, 2, 3, 4, 5}, {}}, {0, 0, 0, 1});
  Vector raw = Vector::Zero(7);
  raw[0] = -0.3;
  auto single = explain_item(raw, tags, 0);
  ASSERT_EQ(single.size(), 1u);
  EXPECT_DOUBLE_EQ(single[0].percent, -100.0);

  raw << 0.4, -0.2, 0.4, 0, 0, 0, 0;
  const auto three = explain_item(raw, tags, 1);
  ASSERT_EQ(three.size(), 3u);
  EXPECT_EQ(three[0].tag, 0u);
  EXPECT_NEAR(three[0].percent, 40.0, 1e-12);
  EXPECT_EQ(three[1].tag, 2u);
  EXPECT_NEAR(three[1].percent, 40.0, 1e-12);
  EXPECT_EQ(three[2].tag, 1u);
  EXPECT_NEAR(three[2].percent, -20.0, 1e-12);

  raw << 1, 1, 1, 1, 1, 1, 0;
  EXPECT_EQ(explain_item(raw, tags, 2).size(), 5u);
  EXPECT_EQ(explanation_terms(raw, tags, 2).terms.size(), 6u);

  raw << 1, 0.02, 0, 0, 0, 0, 0;  // second term < 5%
  EXPECT_EQ(explain_item(raw, tags, 1).size(), 1u);

  EXPECT_TRUE(explain_item(raw, tags, 3).empty());  // popularity only, zero affinity
  EXPECT_THROW(explain_item(raw, tags, 4), ValidationError);
}

TEST(ExplainTest, TermsReconstructScore) {
  std::mt19937_64 rng(13);
  const auto tags = random_tags(rng, 40, 12);
  const DenseMatrix e = random_encoder(rng, 40, 13);
  for (int trial = 0; trial < 1000; ++trial) {
    auto s = UserState::Empty(13);
    for (std::uint32_t i = 0; i < 40; ++i) {
      if (rng() % 8 == 0) s.history.push_back(i);
    }
    if (rng() % 2) s = apply_feedback(s, rng() % 13, +1);
    const auto p = profile(s, e);
    const std::size_t item = rng() % 40;
    const auto ex = explanation_terms(p.raw, tags, item);
    double sum = 0.0;
    for (const auto& term : ex.terms) sum += term.percent * ex.normalizer / 100.0;
    EXPECT_NEAR(sum, score_items(p.raw, tags)[item], 1e-10);
    const auto shown = ex.shown();
    EXPECT_LE(shown.size(), kMaxExplanations);
    for (std::size_t k = 0; k < shown.size(); ++k) {
      EXPECT_GE(std::abs(shown[k].percent), kMinExplanationPercent);
      if (k > 0) EXPECT_GE(std::abs(shown[k - 1].percent), std::abs(shown[k].percent));
    }
  }
}

TEST(CategoryImpactTest, Examples) {
  const auto tags = make_tags(4, {{0}}, {1.0}, 2);  // categories c0, c1, popularity
  Vector d = Vector::Zero(5);
  d[1] = -0.3;
  d[3] = 0.2;
  auto impact = category_impact(d, tags);
  EXPECT_DOUBLE_EQ(impact[1], 1.0);
  EXPECT_DOUBLE_EQ(impact[0], 0.0);

  impact = category_impact(Vector::Zero(5), tags);
  for (const double v : impact) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);

  d << 0.2, -0.1, 0.1, 0, 0;
  impact = category_impact(d, tags);
  EXPECT_NEAR(impact[0], 0.75, 1e-15);
  EXPECT_NEAR(impact[1], 0.25, 1e-15);
  EXPECT_EQ(impact[2], 0.0);
}

TEST(EnsembleTest, Examples) {
  const Vector a = (Vector(4) << -1, 3, 4, 0).finished();
  const Vector b = (Vector(4) << 5, 3, 1, 2).finished();
  const Vector out = ensemble_scores(a, b);
  EXPECT_EQ(out[0], 0.0);
  EXPECT_EQ(out[1], 3.0);
  EXPECT_EQ(out[2], 2.0);
  EXPECT_EQ(out[3], 0.0);
  EXPECT_THROW(ensemble_scores(a, Vector::Zero(3)), ValidationError);
}

TEST(EnsembleTest, CommutativeAndGated) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    Vector a(20), b(20);
    for (int i = 0; i < 20; ++i) {
      a[i] = normal(rng);
      b[i] = normal(rng);
    }
    const Vector ab = ensemble_scores(a, b);
    EXPECT_EQ(ab, ensemble_scores(b, a));
    for (int i = 0; i < 20; ++i) {
      if (a[i] <= 0 || b[i] <= 0) EXPECT_EQ(ab[i], 0.0);
    }
    const Vector s = a.cwiseAbs();
    EXPECT_LE((ensemble_scores(s, s) - s).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(TopKTest, OrderTiesAndExclusion) {
  const Vector s = (Vector(6) << 1, 3, 3, -std::numeric_limits<double>::infinity(), 2, 3).finished();
  const std::vector<std::uint32_t> none;
  EXPECT_EQ(top_k(s, none, 4), (std::vector<std::uint32_t>{1, 2, 5, 4}));
  const std::vector<std::uint32_t> ex{2};
  EXPECT_EQ(top_k(s, ex, 10), (std::vector<std::uint32_t>{1, 5, 4, 0}));
}

class RecommenderTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(34);
    auto tags = std::make_shared<TagMatrix>(random_tags(rng, 25, 8));
    auto model = std::make_shared<EncoderModel>();
    model->encoder = random_encoder(rng, 25, 9);
    model->vocabulary = tags->vocabulary;
    tags_ = tags;
    model_ = model;
  }
  std::shared_ptr<const TagMatrix> tags_;
  std::shared_ptr<const EncoderModel> model_;
};

TEST_F(RecommenderTest, ColdStartFollowsPopularity) {
  auto tags = std::make_shared<TagMatrix>(*tags_);
  tags->popularity = {0.3, 0.9, 0.3, 1.0, 0.1, 0.5, 0.7, 0.2, 0.6, 0.4, 0.8, 0.05, 0.3,
                      0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95, 0.15, 0.25, 0.5, 0.0, 0.3};
  const Recommender rec(model_, tags);
  const auto s = apply_feedback(rec.empty_state(), tags->popularity_tag(), +1);
  const auto got = rec.recommend(s, 25, ScoringMode::kEncoder);
  ASSERT_EQ(got.size(), 25u);
  std::vector<std::uint32_t> expected(25);
  std::iota(expected.begin(), expected.end(), 0u);
  std::stable_sort(expected.begin(), expected.end(), [&](auto a, auto b) {
    return tags->popularity[a] > tags->popularity[b];
  });
  for (std::size_t r = 0; r < 25; ++r) EXPECT_EQ(got[r].item, expected[r]);
  EXPECT_DOUBLE_EQ(got[0].percent_match, 100.0);
}

TEST_F(RecommenderTest, HistoryNeverRecommended) {
  const Recommender rec(model_, tags_);
  auto s = rec.empty_state();
  s.history = {3, 7, 11, 0};
  for (std::size_t k = 1; k <= 30; ++k) {
    const auto got = rec.recommend(s, k, ScoringMode::kEncoder);
    EXPECT_EQ(got.size(), std::min<std::size_t>(k, 21));
    for (std::size_t r = 0; r < got.size(); ++r) {
      EXPECT_FALSE(s.in_history(got[r].item));
      if (r > 0) EXPECT_GE(got[r - 1].score, got[r].score);
    }
  }
  EXPECT_THROW(rec.recommend(s, 0, ScoringMode::kEncoder), ValidationError);
}

TEST_F(RecommenderTest, DominantItemFirst) {
  auto model = std::make_shared<EncoderModel>(*model_);
  model->encoder.setZero();
  const std::uint32_t target = 9;
  for (const auto tag : tags_->binary.row(target)) model->encoder(0, tag) = 1.0;
  model->encoder(0, tags_->popularity_tag()) = -10.0;
  const Recommender rec(model, tags_);
  auto s = rec.empty_state();
  s.history = {0};
  const auto got = rec.recommend(s, 1, ScoringMode::kEncoder);
  ASSERT_EQ(got.size(), 1u);
  // Items with a superset of target's tags tie or beat it; with these
  // weights only exact supersets can, so check the score instead.
  EXPECT_GE(got[0].score, score_items(rec.profile(s).raw, *tags_)[target]);
}

TEST_F(RecommenderTest, FeedbackInverseRestoresExactRecommendations) {
  const Recommender rec(model_, tags_);
  auto s = rec.empty_state();
  s.history = {1, 2};
  const auto before = rec.recommend(s, 25, ScoringMode::kEncoder);
  auto t = apply_feedback(apply_feedback(s, 4, +1), 4, -1);
  const auto after = rec.recommend(t, 25, ScoringMode::kEncoder);
  ASSERT_EQ(before.size(), after.size());
  for (std::size_t r = 0; r < before.size(); ++r) {
    EXPECT_EQ(before[r].item, after[r].item);
    EXPECT_EQ(std::memcmp(&before[r].score, &after[r].score, sizeof(double)), 0);
    EXPECT_EQ(std::memcmp(&before[r].percent_match, &after[r].percent_match, sizeof(double)), 0);
    ASSERT_EQ(before[r].explanations.size(), after[r].explanations.size());
    for (std::size_t k = 0; k < before[r].explanations.size(); ++k) {
      EXPECT_EQ(std::memcmp(&before[r].explanations[k].percent,
                            &after[r].explanations[k].percent, sizeof(double)),
                0);
    }
  }
}

TEST_F(RecommenderTest, ConstantEaseKeepsPositiveEncoderOrder) {
  auto ease = std::make_shared<ItemItemModel>();
  ease->weights = DenseMatrix::Constant(25, 25, 0.5);
  const Recommender rec(model_, tags_, ease);
  auto s = rec.empty_state();
  s.history = {5};
  const auto ens = rec.recommend(s, 24, ScoringMode::kEnsemble);
  const Vector encoder_scores = rec.scores(s, ScoringMode::kEncoder);
  // Brute-force oracle: positive encoder scores sorted descending.
  std::vector<std::uint32_t> positive;
  for (std::uint32_t i = 0; i < 25; ++i) {
    if (i != 5 && encoder_scores[i] > 0) positive.push_back(i);
  }
  std::stable_sort(positive.begin(), positive.end(),
                   [&](auto a, auto b) { return encoder_scores[a] > encoder_scores[b]; });
  ASSERT_GT(positive.size(), 2u);
  for (std::size_t r = 0; r < positive.size(); ++r) {
    EXPECT_EQ(ens[r].item, positive[r]);
    EXPECT_DOUBLE_EQ(ens[r].encoder_score, encoder_scores[positive[r]]);
  }
  for (std::size_t r = positive.size(); r < ens.size(); ++r) EXPECT_EQ(ens[r].score, 0.0);
}

TEST_F(RecommenderTest, EnsembleNeedsItemModel) {
  const Recommender rec(model_, tags_);
  EXPECT_THROW(rec.recommend(rec.empty_state(), 5, ScoringMode::kEnsemble), UnavailableError);
  auto bad = std::make_shared<ItemItemModel>();
  bad->weights = DenseMatrix::Zero(3, 3);
  EXPECT_THROW(Recommender(model_, tags_, bad), ValidationError);
}

TEST_F(RecommenderTest, ShapeMismatchRejected) {
  auto model = std::make_shared<EncoderModel>(*model_);
  model->encoder = DenseMatrix::Zero(25, 4);
  EXPECT_THROW(Recommender(model, tags_), ValidationError);
  const Recommender rec(model_, tags_);
  auto s = rec.empty_state();
  s.history = {25};
  EXPECT_THROW(rec.recommend(s, 3, ScoringMode::kEncoder), ValidationError);
}

}  // namespace
}  // namespace tease
