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

#include "tease/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <cctype>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "tease/errors.h"
#include "tease/random.h"

namespace tease {
namespace {

std::string at_line(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line);
}

// Minimal RFC 4180 field splitter for a single physical line: quoted fields
// may contain commas and doubled quotes, but not newlines.
std::vector<std::string> split_csv(const std::string& line,
                                   const std::string& where) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"' && field.empty() && !was_quoted) {
      quoted = true;
      was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else {
      field.push_back(ch);
    }
  }
  if (quoted) throw ValidationError(where + ": unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

// Reads lines, strips CR and a leading BOM, checks the header and yields the
// data rows with their line numbers.
template <typename Fn>
void read_csv(std::istream& in, const std::string& source,
              const std::vector<std::string>& header, Fn&& on_row) {
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!seen_header) {
      if (trim(line).empty()) continue;
      auto fields = split_csv(line, at_line(source, line_no));
      for (auto& f : fields) f = trim(f);
      if (fields != header) {
        std::string expected;
        for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
        throw ValidationError(at_line(source, line_no) +
                              ": expected header '" + expected + "'");
      }
      seen_header = true;
      continue;
    }
    if (trim(line).empty()) continue;
    auto fields = split_csv(line, at_line(source, line_no));
    if (fields.size() != header.size()) {
      throw ValidationError(at_line(source, line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
    }
    for (auto& f : fields) f = trim(f);
    on_row(fields, line_no);
  }
  if (!seen_header) throw ValidationError(source + ": empty input");
}

std::string format_edge(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> bin_labels(const std::vector<double>& edges) {
  std::vector<std::string> labels;
  labels.push_back("<" + format_edge(edges.front()));
  for (std::size_t j = 1; j < edges.size(); ++j) {
    labels.push_back("[" + format_edge(edges[j - 1]) + "," +
                     format_edge(edges[j]) + ")");
  }
  labels.push_back(">=" + format_edge(edges.back()));
  return labels;
}

// Candidate (category, label) tags of every item, with a deterministic global
// tag order: categories in first-seen order, bins in edge order, other labels
// in first-seen order.
struct Candidates {
  std::vector<Tag> tags;
  std::vector<std::vector<std::uint32_t>> item_tags;  // per item, tag ids
  std::vector<bool> has_metadata;
};

Candidates collect_candidates(const ItemMetadata& metadata,
                              const std::vector<std::string>& item_ids,
                              const TagConfig& config) {
  const std::set<std::string> display(config.display_categories.begin(),
                                      config.display_categories.end());
  std::vector<std::string> category_order;
  std::map<std::string, std::vector<std::string>> labels_in_order;
  std::map<std::pair<std::string, std::string>, std::uint32_t> provisional;
  std::vector<std::vector<std::pair<std::string, std::string>>> per_item(
      item_ids.size());

  Candidates out;
  out.has_metadata.assign(item_ids.size(), false);
  for (const auto& [category, edges] : config.bins) {
    if (edges.empty()) {
      throw ValidationError("binning rule for '" + category + "' has no edges");
    }
  }

  for (std::size_t i = 0; i < item_ids.size(); ++i) {
    if (!metadata.has_item(item_ids[i])) continue;
    out.has_metadata[i] = true;
    for (const auto r : metadata.rows_of(item_ids[i])) {
      const auto& row = metadata.rows[r];
      if (display.count(row.category)) continue;
      if (row.value.empty()) continue;
      std::string label;
      if (auto bin = config.bins.find(row.category); bin != config.bins.end()) {
        double v = 0.0;
        const auto* first = row.value.data();
        const auto* last = first + row.value.size();
        const auto res = std::from_chars(first, last, v);
        if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
          throw ValidationError("metadata line " + std::to_string(row.line) +
                                ": '" + row.value + "' is not numeric but '" +
                                row.category + "' is binned");
        }
        const auto& edges = bin->second;
        const auto j = static_cast<std::size_t>(
            std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
        label = bin_labels(edges)[j];
      } else {
        label = row.value;
      }
      if (!labels_in_order.count(row.category)) {
        category_order.push_back(row.category);
        labels_in_order[row.category];
      }
      auto& labels = labels_in_order[row.category];
      if (std::find(labels.begin(), labels.end(), label) == labels.end()) {
        labels.push_back(label);
      }
      per_item[i].emplace_back(row.category, label);
    }
  }

  for (const auto& category : category_order) {
    auto labels = labels_in_order[category];
    if (auto bin = config.bins.find(category); bin != config.bins.end()) {
      std::vector<std::string> ordered;
      for (const auto& l : bin_labels(bin->second)) {
        if (std::find(labels.begin(), labels.end(), l) != labels.end()) {
          ordered.push_back(l);
        }
      }
      labels = std::move(ordered);
    }
    for (const auto& label : labels) {
      provisional[{category, label}] = static_cast<std::uint32_t>(out.tags.size());
      out.tags.push_back({category, label});
    }
  }

  out.item_tags.resize(item_ids.size());
  for (std::size_t i = 0; i < item_ids.size(); ++i) {
    auto& ids = out.item_tags[i];
    for (const auto& key : per_item[i]) ids.push_back(provisional.at(key));
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  }
  return out;
}

// Tag ids surviving the frequency filter.
std::vector<bool> frequent_tags(const Candidates& c, std::size_t min_items) {
  std::vector<std::size_t> counts(c.tags.size(), 0);
  for (const auto& ids : c.item_tags) {
    for (const auto t : ids) ++counts[t];
  }
  std::vector<bool> keep(c.tags.size());
  for (std::size_t t = 0; t < counts.size(); ++t) keep[t] = counts[t] >= min_items;
  return keep;
}

}  // namespace

InteractionDataset InteractionDataset::FromParts(
    std::vector<std::string> user_ids, std::vector<std::string> item_ids,
    SparseBinaryMatrix interactions) {
  if (interactions.rows() != user_ids.size() ||
      interactions.cols() != item_ids.size()) {
    throw ValidationError("interaction matrix shape does not match id lists");
  }
  InteractionDataset ds;
  ds.user_ids = std::move(user_ids);
  ds.item_ids = std::move(item_ids);
  for (std::uint32_t u = 0; u < ds.user_ids.size(); ++u) {
    if (!ds.user_index.emplace(ds.user_ids[u], u).second) {
      throw ValidationError("duplicate user id '" + ds.user_ids[u] + "'");
    }
  }
  for (std::uint32_t i = 0; i < ds.item_ids.size(); ++i) {
    if (!ds.item_index.emplace(ds.item_ids[i], i).second) {
      throw ValidationError("duplicate item id '" + ds.item_ids[i] + "'");
    }
  }
  ds.interactions = std::move(interactions);
  return ds;
}

InteractionDataset load_interactions(std::istream& in,
                                     const std::string& source) {
  std::vector<std::string> users, items;
  std::unordered_map<std::string, std::uint32_t> user_index, item_index;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> coords;

  read_csv(in, source, {"user_id", "item_id"},
           [&](const std::vector<std::string>& f, std::size_t line) {
             if (f[0].empty() || f[1].empty()) {
               throw ValidationError(at_line(source, line) +
                                     ": empty user or item id");
             }
             auto [u, new_user] = user_index.emplace(
                 f[0], static_cast<std::uint32_t>(users.size()));
             if (new_user) users.push_back(f[0]);
             auto [i, new_item] = item_index.emplace(
                 f[1], static_cast<std::uint32_t>(items.size()));
             if (new_item) items.push_back(f[1]);
             coords.emplace_back(u->second, i->second);
           });
  if (coords.empty()) throw ValidationError(source + ": no interactions");

  auto x = SparseBinaryMatrix::FromCoordinates(users.size(), items.size(),
                                               std::move(coords));
  return InteractionDataset::FromParts(std::move(users), std::move(items),
                                       std::move(x));
}

InteractionDataset load_interactions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return load_interactions(in, path.string());
}

void ItemMetadata::reindex() {
  by_item_.clear();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    by_item_[rows[r].item_id].push_back(r);
  }
}

bool ItemMetadata::has_item(const std::string& item_id) const {
  return by_item_.count(item_id) > 0;
}

const std::vector<std::size_t>& ItemMetadata::rows_of(
    const std::string& item_id) const {
  static const std::vector<std::size_t> kNone;
  const auto it = by_item_.find(item_id);
  return it == by_item_.end() ? kNone : it->second;
}

const std::string* ItemMetadata::find(const std::string& item_id,
                                      const std::string& category) const {
  for (const auto r : rows_of(item_id)) {
    if (rows[r].category == category) return &rows[r].value;
  }
  return nullptr;
}

ItemMetadata load_metadata(std::istream& in, const std::string& source) {
  ItemMetadata md;
  read_csv(in, source, {"item_id", "category", "value"},
           [&](const std::vector<std::string>& f, std::size_t line) {
             if (f[0].empty() || f[1].empty()) {
               throw ValidationError(at_line(source, line) +
                                     ": empty item id or category");
             }
             md.rows.push_back({f[0], f[1], f[2], line});
           });
  md.reindex();
  return md;
}

ItemMetadata load_metadata(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return load_metadata(in, path.string());
}

BinningRules parse_binning_rules(std::istream& in, const std::string& source) {
  BinningRules rules;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(at_line(source, line_no) +
                            ": expected 'category = edge, edge, ...'");
    }
    const std::string category = trim(line.substr(0, eq));
    std::vector<double> edges;
    std::stringstream list(line.substr(eq + 1));
    std::string token;
    while (std::getline(list, token, ',')) {
      token = trim(token);
      double v = 0.0;
      const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
      if (token.empty() || res.ec != std::errc() ||
          res.ptr != token.data() + token.size() || !std::isfinite(v)) {
        throw ValidationError(at_line(source, line_no) + ": bad edge '" +
                              token + "'");
      }
      edges.push_back(v);
    }
    if (category.empty() || edges.empty()) {
      throw ValidationError(at_line(source, line_no) +
                            ": rule needs a category and at least one edge");
    }
    if (!std::is_sorted(edges.begin(), edges.end()) ||
        std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
      throw ValidationError(at_line(source, line_no) +
                            ": edges must be strictly increasing");
    }
    if (!rules.emplace(category, std::move(edges)).second) {
      throw ValidationError(at_line(source, line_no) + ": duplicate rule for '" +
                            category + "'");
    }
  }
  return rules;
}

BinningRules load_binning_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return parse_binning_rules(in, path.string());
}

double TagMatrix::value(std::size_t item, std::size_t tag) const {
  if (tag == popularity_tag()) return popularity[item];
  return binary.contains(item, static_cast<std::uint32_t>(tag)) ? 1.0 : 0.0;
}

DenseMatrix TagMatrix::dense() const {
  DenseMatrix d = DenseMatrix::Zero(num_items(), num_tags());
  for (std::size_t i = 0; i < num_items(); ++i) {
    for (const auto t : binary.row(i)) d(i, t) = 1.0;
    d(i, popularity_tag()) = popularity[i];
  }
  return d;
}

std::size_t TagMatrix::find_tag(const std::string& category,
                                const std::string& label) const {
  for (std::size_t t = 0; t < vocabulary.size(); ++t) {
    if (vocabulary[t].category == category && vocabulary[t].label == label) {
      return t;
    }
  }
  throw NotFoundError("unknown tag " + category + "/" + label);
}

TagMatrix encode_tags(const ItemMetadata& metadata,
                      const InteractionDataset& ds,
                      const SparseBinaryMatrix& counts,
                      const TagConfig& config) {
  if (counts.cols() != ds.num_items()) {
    throw ValidationError("popularity source has " +
                          std::to_string(counts.cols()) + " items, dataset has " +
                          std::to_string(ds.num_items()));
  }
  const Candidates cand = collect_candidates(metadata, ds.item_ids, config);
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < ds.num_items(); ++i) {
    if (!cand.has_metadata[i]) missing.push_back(ds.item_ids[i]);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += " " + id;
    throw ValidationError("items without metadata:" + list);
  }

  const auto keep = frequent_tags(cand, config.min_items_per_tag);
  std::vector<std::uint32_t> remap(cand.tags.size(), 0);
  TagMatrix out;
  std::map<std::string, std::uint32_t> category_ids;
  for (std::size_t t = 0; t < cand.tags.size(); ++t) {
    if (!keep[t]) continue;
    remap[t] = static_cast<std::uint32_t>(out.vocabulary.size());
    const auto& tag = cand.tags[t];
    auto [it, fresh] = category_ids.emplace(
        tag.category, static_cast<std::uint32_t>(out.categories.size()));
    if (fresh) out.categories.push_back(tag.category);
    out.vocabulary.push_back(tag);
    out.tag_category.push_back(it->second);
  }

  std::vector<std::vector<std::uint32_t>> rows(ds.num_items());
  std::vector<std::string> tagless;
  for (std::size_t i = 0; i < ds.num_items(); ++i) {
    for (const auto t : cand.item_tags[i]) {
      if (keep[t]) rows[i].push_back(remap[t]);
    }
    if (rows[i].empty()) tagless.push_back(ds.item_ids[i]);
  }
  if (!tagless.empty()) {
    std::string list;
    for (const auto& id : tagless) list += " " + id;
    throw ValidationError("items without tags after filtering:" + list);
  }
  out.binary = SparseBinaryMatrix::FromRows(out.vocabulary.size(), rows);

  const auto item_counts = counts.column_counts();
  const std::size_t max_count =
      *std::max_element(item_counts.begin(), item_counts.end());
  if (max_count == 0) {
    throw ValidationError("popularity undefined: no interactions in source");
  }
  out.popularity.resize(ds.num_items());
  for (std::size_t i = 0; i < ds.num_items(); ++i) {
    out.popularity[i] =
        static_cast<double>(item_counts[i]) / static_cast<double>(max_count);
  }
  out.categories.push_back(kPopularityCategory);
  out.vocabulary.push_back({kPopularityCategory, kPopularityCategory});
  out.tag_category.push_back(static_cast<std::uint32_t>(out.categories.size() - 1));
  return out;
}

TagMatrix encode_tags(const ItemMetadata& metadata,
                      const InteractionDataset& ds, const TagConfig& config) {
  return encode_tags(metadata, ds, ds.interactions, config);
}

InteractionDataset drop_untaggable(const InteractionDataset& ds,
                                   const ItemMetadata& metadata,
                                   const TagConfig& config,
                                   FilterReport* report) {
  InteractionDataset current = ds;
  while (true) {
    const Candidates cand =
        collect_candidates(metadata, current.item_ids, config);
    const auto keep = frequent_tags(cand, config.min_items_per_tag);

    std::vector<bool> keep_item(current.num_items(), true);
    bool changed = false;
    for (std::size_t i = 0; i < current.num_items(); ++i) {
      const bool tagged = std::any_of(cand.item_tags[i].begin(),
                                      cand.item_tags[i].end(),
                                      [&](std::uint32_t t) { return keep[t]; });
      if (!tagged) {
        keep_item[i] = false;
        changed = true;
        spdlog::warn("dropping item '{}': {}", current.item_ids[i],
                     cand.has_metadata[i] ? "no tag left after filtering"
                                          : "no metadata");
        if (report) report->dropped_items.push_back(current.item_ids[i]);
      }
    }
    if (!changed) return current;

    std::vector<std::uint32_t> new_index(current.num_items(), 0);
    std::vector<std::string> items;
    for (std::size_t i = 0; i < current.num_items(); ++i) {
      if (keep_item[i]) {
        new_index[i] = static_cast<std::uint32_t>(items.size());
        items.push_back(current.item_ids[i]);
      }
    }
    std::vector<std::string> users;
    std::vector<std::vector<std::uint32_t>> rows;
    for (std::size_t u = 0; u < current.num_users(); ++u) {
      std::vector<std::uint32_t> row;
      for (const auto i : current.interactions.row(u)) {
        if (keep_item[i]) row.push_back(new_index[i]);
      }
      if (row.empty()) {
        spdlog::warn("dropping user '{}': no interactions left",
                     current.user_ids[u]);
        if (report) report->dropped_users.push_back(current.user_ids[u]);
        continue;
      }
      users.push_back(current.user_ids[u]);
      rows.push_back(std::move(row));
    }
    if (items.empty() || users.empty()) {
      throw ValidationError("no taggable items remain after filtering");
    }
    auto x = SparseBinaryMatrix::FromRows(items.size(), rows);
    current = InteractionDataset::FromParts(std::move(users), std::move(items),
                                            std::move(x));
  }
}

void SplitSpec::validate() const {
  if (!(train_fraction > 0 && validation_fraction > 0 && test_fraction > 0)) {
    throw ValidationError("split fractions must be positive");
  }
  if (std::abs(train_fraction + validation_fraction + test_fraction - 1.0) > 1e-9) {
    throw ValidationError("split fractions must sum to 1");
  }
  if (!(history_fraction > 0 && history_fraction < 1)) {
    throw ValidationError("history fraction must be in (0, 1)");
  }
  if (min_interactions < 2) {
    throw ValidationError("evaluation users need at least 2 interactions");
  }
}

DataSplit split_strong_generalization(const InteractionDataset& ds,
                                      const SplitSpec& spec) {
  spec.validate();
  const auto& x = ds.interactions;
  const std::size_t m = x.rows();
  const auto n_val = static_cast<std::size_t>(
      std::llround(spec.validation_fraction * static_cast<double>(m)));
  const auto n_test = static_cast<std::size_t>(
      std::llround(spec.test_fraction * static_cast<double>(m)));

  std::vector<std::uint32_t> eligible;
  for (std::uint32_t u = 0; u < m; ++u) {
    if (x.row(u).size() >= spec.min_interactions) eligible.push_back(u);
  }
  if (n_val == 0 || n_test == 0 || eligible.size() < n_val + n_test ||
      n_val + n_test >= m) {
    throw ValidationError(
        "insufficient eligible users: " + std::to_string(eligible.size()) +
        " of " + std::to_string(m) + " users have >= " +
        std::to_string(spec.min_interactions) + " interactions, need " +
        std::to_string(n_val) + " validation + " + std::to_string(n_test) +
        " test and at least one training user");
  }

  Rng rng(spec.seed);
  shuffle(std::span(eligible), rng);

  auto make_user = [&](std::uint32_t u) {
    EvaluationUser eu;
    eu.user = u;
    std::vector<std::uint32_t> items(x.row(u).begin(), x.row(u).end());
    shuffle(std::span(items), rng);
    const double want =
        std::ceil(spec.history_fraction * static_cast<double>(items.size()) - 1e-9);
    const std::size_t h =
        std::min(static_cast<std::size_t>(want), items.size() - 1);
    eu.history.assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(h));
    eu.truth.assign(items.begin() + static_cast<std::ptrdiff_t>(h), items.end());
    std::sort(eu.history.begin(), eu.history.end());
    std::sort(eu.truth.begin(), eu.truth.end());
    return eu;
  };

  DataSplit out;
  std::vector<bool> held_out(m, false);
  for (std::size_t k = 0; k < n_val; ++k) {
    held_out[eligible[k]] = true;
    out.validation.users.push_back(make_user(eligible[k]));
  }
  for (std::size_t k = n_val; k < n_val + n_test; ++k) {
    held_out[eligible[k]] = true;
    out.test.users.push_back(make_user(eligible[k]));
  }
  auto by_user = [](const EvaluationUser& a, const EvaluationUser& b) {
    return a.user < b.user;
  };
  std::sort(out.validation.users.begin(), out.validation.users.end(), by_user);
  std::sort(out.test.users.begin(), out.test.users.end(), by_user);

  std::vector<std::vector<std::uint32_t>> rows;
  for (std::uint32_t u = 0; u < m; ++u) {
    if (held_out[u]) continue;
    out.train_users.push_back(u);
    rows.emplace_back(x.row(u).begin(), x.row(u).end());
  }
  out.train = SparseBinaryMatrix::FromRows(x.cols(), rows);
  return out;
}

std::uint64_t dataset_hash(const InteractionDataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_bytes = [&](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  auto mix_u64 = [&](std::uint64_t v) {
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(v >> (8 * b));
    mix_bytes(bytes, 8);
  };
  for (const auto* ids : {&ds.user_ids, &ds.item_ids}) {
    mix_u64(ids->size());
    for (const auto& id : *ids) {
      mix_u64(id.size());
      mix_bytes(id.data(), id.size());
    }
  }
  for (const auto p : ds.interactions.row_ptr()) mix_u64(p);
  for (const auto c : ds.interactions.col_idx()) mix_u64(c);
  return h;
}

}  // namespace tease
