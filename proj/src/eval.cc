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

#include "tease/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>
#include <tuple>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "tease/errors.h"

namespace tease {

namespace {

void check_metric_args(std::span<const std::uint32_t> truth, std::size_t k) {
  if (truth.empty()) throw ValidationError("ground truth is empty");
  if (k == 0) throw ValidationError("k must be at least 1");
}

bool contains(std::span<const std::uint32_t> values, std::uint32_t v) {
  return std::find(values.begin(), values.end(), v) != values.end();
}

// Runs body(u) for u in [0, count) on up to hardware_concurrency threads.
template <typename Body>
void parallel_for(std::size_t count, Body body) {
  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), count);
  if (workers <= 1) {
    for (std::size_t u = 0; u < count; ++u) body(u);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t u = w; u < count; u += workers) body(u);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

void aggregate(MetricReport& r) {
  r.recall20 = mean(r.user_recall20);
  r.recall100 = mean(r.user_recall100);
  r.ndcg100 = mean(r.user_ndcg100);
}

std::vector<const EvaluationUser*> usable_users(const EvaluationSplit& split) {
  std::vector<const EvaluationUser*> out;
  for (const auto& u : split.users) {
    if (u.truth.empty()) {
      spdlog::warn("user {} has no ground truth; skipped", u.user);
      continue;
    }
    out.push_back(&u);
  }
  return out;
}

struct UserMetrics {
  double recall20, recall100, ndcg100;
};

UserMetrics score_user(const Vector& scores, const EvaluationUser& u) {
  const auto ranked = top_k(scores, u.history, 100);
  return {recall_at_k(ranked, u.truth, 20), recall_at_k(ranked, u.truth, 100),
          ndcg_at_k(ranked, u.truth, 100)};
}

MetricReport build_report(const std::vector<const EvaluationUser*>& users,
                          const std::vector<UserMetrics>& m) {
  MetricReport r;
  for (std::size_t k = 0; k < users.size(); ++k) {
    r.users.push_back(users[k]->user);
    r.user_recall20.push_back(m[k].recall20);
    r.user_recall100.push_back(m[k].recall100);
    r.user_ndcg100.push_back(m[k].ndcg100);
  }
  aggregate(r);
  return r;
}

}  // namespace

double recall_at_k(std::span<const std::uint32_t> ranked,
                   std::span<const std::uint32_t> truth, std::size_t k) {
  check_metric_args(truth, k);
  const std::size_t depth = std::min(k, ranked.size());
  std::size_t hits = 0;
  for (std::size_t r = 0; r < depth; ++r) hits += contains(truth, ranked[r]);
  return static_cast<double>(hits) / static_cast<double>(std::min(k, truth.size()));
}

double ndcg_at_k(std::span<const std::uint32_t> ranked,
                 std::span<const std::uint32_t> truth, std::size_t k) {
  check_metric_args(truth, k);
  const std::size_t depth = std::min(k, ranked.size());
  double dcg = 0.0;
  for (std::size_t r = 0; r < depth; ++r) {
    if (contains(truth, ranked[r])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  double ideal = 0.0;
  for (std::size_t r = 0; r < std::min(k, truth.size()); ++r) {
    ideal += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  return dcg / ideal;
}

Scorer make_scorer(const Recommender& rec, ScoringMode mode) {
  return [&rec, mode](const UserState& s) { return rec.scores(s, mode); };
}

MetricReport evaluate(const Scorer& scorer, std::size_t num_tags,
                      const EvaluationSplit& split) {
  const auto users = usable_users(split);
  std::vector<UserMetrics> m(users.size());
  parallel_for(users.size(), [&](std::size_t k) {
    auto state = UserState::Empty(num_tags);
    state.history = users[k]->history;
    m[k] = score_user(scorer(state), *users[k]);
  });
  return build_report(users, m);
}

MetricReport evaluate(const Recommender& rec, ScoringMode mode,
                      const EvaluationSplit& split) {
  return evaluate(make_scorer(rec, mode), rec.num_tags(), split);
}

GridResult grid_search(const std::vector<Hyperparams>& grid,
                       const SparseBinaryMatrix& train,
                       std::shared_ptr<const TagMatrix> tags,
                       const EvaluationSplit& validation) {
  if (grid.empty()) throw ValidationError("hyperparameter grid is empty");
  for (const auto& hp : grid) hp.validate();
  if (train.cols() != tags->num_items()) {
    throw ValidationError("interactions have " + std::to_string(train.cols()) +
                          " items, tag matrix has " + std::to_string(tags->num_items()));
  }
  Precomputation pre = precompute(train, tags->dense(), grid.front());
  GridResult result;
  std::shared_ptr<EncoderModel> best;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const Hyperparams& hp = grid[g];
    pre.set_regularization(hp);
    AdmmResult admm = solve_admm(pre, hp);
    auto model = std::make_shared<EncoderModel>();
    model->encoder = std::move(admm.state.encoder);
    model->vocabulary = tags->vocabulary;
    model->hyperparams = hp;
    model->report = admm.report;
    const Recommender rec(model, tags);
    GridRow row{hp, evaluate(rec, ScoringMode::kEncoder, validation), admm.report};
    spdlog::info("grid point {}/{}: lambda1={} lambda2={} rho={} ndcg@100={:.6f}", g + 1,
                 grid.size(), hp.lambda1, hp.lambda2, hp.rho, row.validation.ndcg100);
    bool better = g == 0;
    if (!better) {
      const auto& cur = result.rows[result.best];
      const double a = row.validation.ndcg100, b = cur.validation.ndcg100;
      better = a > b || (a == b && std::tie(hp.lambda1, hp.lambda2) <
                                        std::tie(cur.hyperparams.lambda1,
                                                 cur.hyperparams.lambda2));
    }
    result.rows.push_back(std::move(row));
    if (better) {
      result.best = g;
      best = model;
    }
  }
  result.best_model = *best;
  return result;
}

void SimulationConfig::validate() const {
  if (tags_boosted != 1 && tags_boosted != 2) {
    throw ValidationError("tags_boosted must be 1 or 2");
  }
  if (clicks < 0 || clicks > kMaxClicks) {
    throw ValidationError("clicks must be in [0, " + std::to_string(kMaxClicks) + "]");
  }
  if (runs < 1) throw ValidationError("runs must be at least 1");
}

std::vector<std::size_t> sample_boost_tags(const TagMatrix& tags,
                                           std::span<const std::uint32_t> truth,
                                           std::size_t count, Rng& rng) {
  std::vector<std::size_t> weight(tags.num_binary_tags(), 0);
  for (const auto item : truth) {
    for (const auto tag : tags.binary.row(item)) ++weight[tag];
  }
  std::vector<std::size_t> out;
  while (out.size() < count) {
    std::size_t total = 0;
    for (const auto w : weight) total += w;
    if (total == 0) break;
    auto pick = uniform_below(rng, total);
    std::size_t tag = 0;
    while (pick >= weight[tag]) pick -= weight[tag++];
    out.push_back(tag);
    weight[tag] = 0;
  }
  return out;
}

SimulationResult simulate_feedback(const Recommender& rec, ScoringMode mode,
                                   const EvaluationSplit& split,
                                   const SimulationConfig& config) {
  config.validate();
  std::vector<const EvaluationUser*> users;
  for (const auto* u : usable_users(split)) {
    bool tagged = false;
    for (const auto item : u->truth) tagged |= rec.tags().binary.row(item).size() > 0;
    if (!tagged) {
      spdlog::warn("user {}: ground-truth items carry no tags; skipped", u->user);
      continue;
    }
    users.push_back(u);
  }
  std::vector<UserMetrics> base(users.size()), boosted(users.size());
  parallel_for(users.size(), [&](std::size_t k) {
    const auto& u = *users[k];
    auto state = rec.empty_state();
    state.history = u.history;
    base[k] = score_user(rec.scores(state, mode), u);
    UserMetrics sum{0, 0, 0};
    for (std::size_t run = 0; run < config.runs; ++run) {
      std::seed_seq seq{config.seed, static_cast<std::uint64_t>(u.user),
                        static_cast<std::uint64_t>(run)};
      Rng rng(seq);
      auto s = state;
      for (const auto tag : sample_boost_tags(rec.tags(), u.truth, config.tags_boosted, rng)) {
        for (int c = 0; c < config.clicks; ++c) s = apply_feedback(s, tag, +1);
      }
      const auto m = score_user(rec.scores(s, mode), u);
      sum.recall20 += m.recall20 - base[k].recall20;
      sum.recall100 += m.recall100 - base[k].recall100;
      sum.ndcg100 += m.ndcg100 - base[k].ndcg100;
    }
    // Averaging deltas keeps a no-op run exactly equal to the static value.
    const double n = static_cast<double>(config.runs);
    boosted[k] = {base[k].recall20 + sum.recall20 / n, base[k].recall100 + sum.recall100 / n,
                  base[k].ndcg100 + sum.ndcg100 / n};
  });
  SimulationResult out;
  out.static_report = build_report(users, base);
  out.interactive = build_report(users, boosted);
  const double s = out.static_report.ndcg100;
  out.improvement_percent = s > 0.0 ? 100.0 * (out.interactive.ndcg100 - s) / s : 0.0;
  return out;
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "model,scenario,recall@20,recall@100,ndcg@100,improvement_percent\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,", r.metrics.recall20,
                  r.metrics.recall100, r.metrics.ndcg100);
    out << r.model << ',' << r.scenario << ',' << buf;
    if (r.improvement_percent) {
      std::snprintf(buf, sizeof(buf), "%.4f", *r.improvement_percent);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace tease
