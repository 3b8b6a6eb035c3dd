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

// Command-line front end: ingestion, training, evaluation and serving.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "tease/errors.h"
#include "tease/eval.h"
#include "tease/model_io.h"
#include "tease/pipeline.h"
#include "tease/service.h"

namespace {

using namespace tease;
using Json = nlohmann::json;

struct Common {
  DataOptions data;
  std::string bins;
};

void add_data_options(CLI::App* cmd, Common& c) {
  cmd->add_option("--interactions", c.data.interactions, "user_id,item_id CSV")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--metadata", c.data.metadata, "item_id,category,value CSV")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--bins", c.bins, "numeric binning rules")->check(CLI::ExistingFile);
  cmd->add_option("--min-items-per-tag", c.data.min_items_per_tag, "drop rarer tags")
      ->capture_default_str();
  cmd->add_option("--seed", c.data.split.seed, "split seed")->capture_default_str();
  cmd->add_option("--validation-fraction", c.data.split.validation_fraction)->capture_default_str();
  cmd->add_option("--test-fraction", c.data.split.test_fraction)->capture_default_str();
  cmd->add_option("--min-interactions", c.data.split.min_interactions,
                  "minimum items for an evaluation user")
      ->capture_default_str();
  cmd->add_option("--history-fraction", c.data.split.history_fraction)->capture_default_str();
  cmd->add_flag("--all-users", c.data.all_users, "train on every user, not only the training split");
}

PreparedData prepare(Common& c) {
  c.data.split.train_fraction =
      1.0 - c.data.split.validation_fraction - c.data.split.test_fraction;
  if (!c.bins.empty()) c.data.bins = c.bins;
  return prepare_data(c.data);
}

void add_hyper_options(CLI::App* cmd, Hyperparams& hp) {
  cmd->add_option("--lambda1", hp.lambda1, "off-diagonal penalty")->capture_default_str();
  cmd->add_option("--lambda2", hp.lambda2, "encoder penalty")->capture_default_str();
  cmd->add_option("--rho", hp.rho, "ADMM penalty")->capture_default_str();
  cmd->add_option("--max-iterations", hp.max_iterations)->capture_default_str();
  cmd->add_option("--tolerance", hp.tolerance)->capture_default_str();
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Json hyper_json(const Hyperparams& hp) {
  return {{"lambda1", hp.lambda1}, {"lambda2", hp.lambda2}, {"rho", hp.rho},
          {"max_iterations", hp.max_iterations}, {"tolerance", hp.tolerance}};
}

Json manifest(const std::string& command, const Common& c, const PreparedData& d) {
  const auto& s = c.data.split;
  return {{"command", command},
          {"seed", s.seed},
          {"split",
           {{"train_fraction", s.train_fraction},
            {"validation_fraction", s.validation_fraction},
            {"test_fraction", s.test_fraction},
            {"min_interactions", s.min_interactions},
            {"history_fraction", s.history_fraction}}},
          {"all_users", c.data.all_users},
          {"min_items_per_tag", c.data.min_items_per_tag},
          {"dataset_hash", hex(dataset_hash(d.dataset))},
          {"users", d.dataset.num_users()},
          {"items", d.dataset.num_items()},
          {"tags", d.tags->num_tags()},
          {"validation_users", d.split.validation.users.size()},
          {"test_users", d.split.test.users.size()}};
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw ResourceError("cannot write " + path);
}

void write_manifest(const std::string& path, const Json& m) {
  if (!path.empty()) write_text(path, m.dump(2) + "\n");
}

const EvaluationSplit& pick_split(const PreparedData& d, const std::string& which) {
  if (which == "test") return d.split.test;
  if (which == "validation") return d.split.validation;
  throw ValidationError("--split must be test or validation");
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(part, &pos));
      if (pos != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw ValidationError("bad number \"" + part + "\" in list \"" + text + "\"");
    }
  }
  if (out.empty()) throw ValidationError("empty list");
  return out;
}

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tag-space linear autoencoder recommender"};
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");
  app.add_flag("-q,--quiet", quiet, "warnings and errors only");

  Common common;
  Hyperparams hp;
  std::string model_path, ease_path, report_path, manifest_path, which_split = "test";
  double ease_lambda = 500.0;

  auto* ingest = app.add_subcommand("ingest", "load data and print a summary");
  add_data_options(ingest, common);

  auto* train_cmd = app.add_subcommand("train", "train the tag encoder");
  add_data_options(train_cmd, common);
  add_hyper_options(train_cmd, hp);
  train_cmd->add_option("--model", model_path, "output model file")->required();
  train_cmd->add_option("--manifest", manifest_path, "run manifest JSON");

  auto* ease_cmd = app.add_subcommand("train-ease", "train the item-item baseline");
  add_data_options(ease_cmd, common);
  ease_cmd->add_option("--lambda", ease_lambda, "ridge penalty")->capture_default_str();
  ease_cmd->add_option("--model", model_path, "output model file")->required();

  auto* eval_cmd = app.add_subcommand("evaluate", "ranking metrics on held-out users");
  add_data_options(eval_cmd, common);
  eval_cmd->add_option("--model", model_path, "encoder model")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--ease-model", ease_path, "item-item model; adds ease and ensemble rows")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--split", which_split, "test or validation")->capture_default_str();
  eval_cmd->add_option("--report", report_path, "CSV output (default stdout)");
  eval_cmd->add_option("--manifest", manifest_path, "run manifest JSON");

  std::string grid1 = "0.1,1,10", grid2 = "0.1,1,10";
  auto* grid_cmd = app.add_subcommand("grid-search", "pick (lambda1, lambda2) on validation nDCG@100");
  add_data_options(grid_cmd, common);
  grid_cmd->add_option("--lambda1-grid", grid1, "comma-separated")->capture_default_str();
  grid_cmd->add_option("--lambda2-grid", grid2, "comma-separated")->capture_default_str();
  grid_cmd->add_option("--rho", hp.rho)->capture_default_str();
  grid_cmd->add_option("--max-iterations", hp.max_iterations)->capture_default_str();
  grid_cmd->add_option("--tolerance", hp.tolerance)->capture_default_str();
  grid_cmd->add_option("--model", model_path, "write the best model here");
  grid_cmd->add_option("--report", report_path, "CSV table (default stdout)");
  grid_cmd->add_option("--manifest", manifest_path, "run manifest JSON");

  SimulationConfig sim;
  auto* sim_cmd = app.add_subcommand("simulate", "simulated tag feedback on held-out users");
  add_data_options(sim_cmd, common);
  sim_cmd->add_option("--model", model_path, "encoder model")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--clicks", sim.clicks, "clicks per boosted tag")->capture_default_str();
  sim_cmd->add_option("--runs", sim.runs, "runs per user")->capture_default_str();
  sim_cmd->add_option("--sim-seed", sim.seed, "tag sampling seed")->capture_default_str();
  sim_cmd->add_option("--split", which_split, "test or validation")->capture_default_str();
  sim_cmd->add_option("--report", report_path, "CSV output (default stdout)");
  sim_cmd->add_option("--manifest", manifest_path, "run manifest JSON");

  std::string host = "127.0.0.1", session_log;
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP service for the console");
  add_data_options(serve_cmd, common);
  serve_cmd->add_option("--model", model_path, "encoder model")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--ease-model", ease_path, "item-item model for the ensemble")
      ->check(CLI::ExistingFile);
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--port", port)->capture_default_str();
  serve_cmd->add_option("--session-log", session_log, "JSONL session events, replayed at start");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("tease"));
  spdlog::set_level(verbose ? spdlog::level::debug
                            : quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (*ingest) {
      const auto d = prepare(common);
      Json out = manifest("ingest", common, d);
      out["interactions"] = d.dataset.interactions.nnz();
      out["dropped_items"] = d.filtered.dropped_items;
      out["dropped_users"] = d.filtered.dropped_users;
      out["categories"] = d.tags->categories;
      std::cout << out.dump(2) << "\n";
    } else if (*train_cmd) {
      hp.validate();
      const auto d = prepare(common);
      const auto model = train_encoder(d, hp);
      save_encoder(model, model_path);
      spdlog::info("wrote {} ({} iterations, objective {:.6g}, converged: {})", model_path,
                   model.report.iterations, model.report.objective, model.report.converged);
      Json m = manifest("train", common, d);
      m["hyperparams"] = hyper_json(hp);
      m["converged"] = model.report.converged;
      m["iterations"] = model.report.iterations;
      write_manifest(manifest_path, m);
    } else if (*ease_cmd) {
      const auto d = prepare(common);
      save_item_model(train_item_model(d, ease_lambda), model_path);
      spdlog::info("wrote {}", model_path);
    } else if (*eval_cmd) {
      const auto d = prepare(common);
      std::optional<ItemItemModel> ease;
      if (!ease_path.empty()) ease = load_item_model(ease_path);
      const auto rec = make_recommender(d, load_encoder(model_path), ease);
      const auto& split = pick_split(d, which_split);
      std::vector<ReportRow> rows{
          {"encoder", which_split, evaluate(*rec, ScoringMode::kEncoder, split), std::nullopt}};
      if (ease) {
        rows.push_back({"ease", which_split, evaluate(*rec, ScoringMode::kEase, split), std::nullopt});
        rows.push_back({"encoder_x_ease", which_split, evaluate(*rec, ScoringMode::kEnsemble, split),
                        std::nullopt});
      }
      std::ostringstream csv;
      write_report_csv(csv, rows);
      write_text(report_path, csv.str());
      Json m = manifest("evaluate", common, d);
      m["hyperparams"] = hyper_json(rec->encoder().hyperparams);
      if (ease) m["ease_lambda"] = rec->item_model().lambda;
      write_manifest(manifest_path, m);
    } else if (*grid_cmd) {
      const auto d = prepare(common);
      std::vector<Hyperparams> grid;
      for (const double l1 : parse_list(grid1)) {
        for (const double l2 : parse_list(grid2)) {
          Hyperparams p = hp;
          p.lambda1 = l1;
          p.lambda2 = l2;
          grid.push_back(p);
        }
      }
      auto result = grid_search(grid, d.training(), d.tags, d.split.validation);
      std::ostringstream csv;
      csv << "lambda1,lambda2,rho,recall@20,recall@100,ndcg@100,iterations,converged,best\n";
      for (std::size_t g = 0; g < result.rows.size(); ++g) {
        const auto& r = result.rows[g];
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%.6g,%.6g,%.6g,%.6f,%.6f,%.6f,%zu,%d,%d\n",
                      r.hyperparams.lambda1, r.hyperparams.lambda2, r.hyperparams.rho,
                      r.validation.recall20, r.validation.recall100, r.validation.ndcg100,
                      r.convergence.iterations, r.convergence.converged ? 1 : 0,
                      g == result.best ? 1 : 0);
        csv << buf;
      }
      write_text(report_path, csv.str());
      if (!model_path.empty()) {
        result.best_model.item_ids = d.dataset.item_ids;
        save_encoder(result.best_model, model_path);
      }
      Json m = manifest("grid-search", common, d);
      Json g = Json::array();
      for (const auto& p : grid) g.push_back(hyper_json(p));
      m["grid"] = std::move(g);
      m["best"] = hyper_json(grid[result.best]);
      write_manifest(manifest_path, m);
    } else if (*sim_cmd) {
      sim.validate();
      const auto d = prepare(common);
      const auto rec = make_recommender(d, load_encoder(model_path));
      const auto& split = pick_split(d, which_split);
      auto one = sim, two = sim;
      one.tags_boosted = 1;
      two.tags_boosted = 2;
      const auto r1 = simulate_feedback(*rec, ScoringMode::kEncoder, split, one);
      const auto r2 = simulate_feedback(*rec, ScoringMode::kEncoder, split, two);
      std::ostringstream csv;
      write_report_csv(csv, {{"encoder", "static", r1.static_report, std::nullopt},
                             {"encoder", "one_tag", r1.interactive, r1.improvement_percent},
                             {"encoder", "two_tags", r2.interactive, r2.improvement_percent}});
      write_text(report_path, csv.str());
      Json m = manifest("simulate", common, d);
      m["simulation"] = {{"clicks", sim.clicks}, {"runs", sim.runs}, {"seed", sim.seed}};
      m["hyperparams"] = hyper_json(rec->encoder().hyperparams);
      write_manifest(manifest_path, m);
    } else if (*serve_cmd) {
      const auto d = prepare(common);
      std::optional<ItemItemModel> ease;
      if (!ease_path.empty()) ease = load_item_model(ease_path);
      ServiceConfig cfg;
      cfg.session_log = session_log;
      RecommendationService service(cfg, d.metadata);
      service.load_model(make_recommender(d, load_encoder(model_path), ease));
      if (!session_log.empty()) {
        std::ifstream in(session_log);
        if (in) spdlog::info("replayed {} session events", service.replay(in));
      }
      HttpServer server(service);
      const int bound = server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      spdlog::info("listening on http://{}:{}", host, bound);
      server.listen();
      g_server = nullptr;
    }
  } catch (const ValidationError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const NotFoundError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
