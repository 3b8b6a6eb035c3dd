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
#include <functional>
#include <memory>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tease/dataset.h"
#include "tease/random.h"
#include "tease/recommend.h"
#include "tease/solver.h"

namespace tease {

// |top k ∩ truth| / min(k, |truth|). `truth` need not be sorted.
double recall_at_k(std::span<const std::uint32_t> ranked,
                   std::span<const std::uint32_t> truth, std::size_t k);
// DCG over the first k ranks divided by the ideal DCG for min(k, |truth|) hits.
double ndcg_at_k(std::span<const std::uint32_t> ranked,
                 std::span<const std::uint32_t> truth, std::size_t k);

struct MetricReport {
  double recall20 = 0.0;
  double recall100 = 0.0;
  double ndcg100 = 0.0;
  std::vector<std::uint32_t> users;  // evaluated users, split order
  std::vector<double> user_recall20;
  std::vector<double> user_recall100;
  std::vector<double> user_ndcg100;

  std::size_t num_users() const { return users.size(); }
};

// Scores every item for a user state; larger is better.
using Scorer = std::function<Vector(const UserState&)>;

Scorer make_scorer(const Recommender& rec, ScoringMode mode);

// Ranks all items except the history for each user. Users with an empty
// ground truth are skipped with a warning.
MetricReport evaluate(const Scorer& scorer, std::size_t num_tags,
                      const EvaluationSplit& split);
MetricReport evaluate(const Recommender& rec, ScoringMode mode,
                      const EvaluationSplit& split);

struct GridRow {
  Hyperparams hyperparams;
  MetricReport validation;
  ConvergenceReport convergence;
};

struct GridResult {
  std::size_t best = 0;  // index into rows
  std::vector<GridRow> rows;
  EncoderModel best_model;
};

// Trains one encoder per grid point on `train` and picks the best validation
// nDCG@100; ties go to the smaller (λ1, λ2). The eigendecompositions are
// shared across points.
GridResult grid_search(const std::vector<Hyperparams>& grid,
                       const SparseBinaryMatrix& train,
                       std::shared_ptr<const TagMatrix> tags,
                       const EvaluationSplit& validation);

struct SimulationConfig {
  std::size_t tags_boosted = 1;  // 1 or 2
  int clicks = 3;                // 0..kMaxClicks
  std::size_t runs = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SimulationResult {
  MetricReport static_report;
  MetricReport interactive;
  double improvement_percent = 0.0;  // relative nDCG@100 change
};

// Samples `tags_boosted` distinct binary tags, weighted by how often each
// occurs among the user's ground-truth items.
std::vector<std::size_t> sample_boost_tags(const TagMatrix& tags,
                                           std::span<const std::uint32_t> truth,
                                           std::size_t count, Rng& rng);

// Boosts sampled tags with positive clicks and re-ranks; metrics are averaged
// over runs per user, then over users.
SimulationResult simulate_feedback(const Recommender& rec, ScoringMode mode,
                                   const EvaluationSplit& split,
                                   const SimulationConfig& config);

struct ReportRow {
  std::string model;
  std::string scenario;
  MetricReport metrics;
  std::optional<double> improvement_percent;
};

// CSV with header model,scenario,recall@20,recall@100,ndcg@100,improvement_percent.
void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);

}  // namespace tease
