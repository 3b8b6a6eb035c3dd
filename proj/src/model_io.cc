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

#include "tease/model_io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"

#include "tease/errors.h"

namespace tease {
namespace {

using nlohmann::json;

constexpr const char* kMagic = "TEASE-MODEL";

void write_matrix(const DenseMatrix& m, std::ostream& out) {
  std::string buf(static_cast<std::size_t>(m.size()) * 8, '\0');
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    const auto bits = std::bit_cast<std::uint64_t>(m.data()[k]);
    for (int b = 0; b < 8; ++b) {
      buf[static_cast<std::size_t>(k) * 8 + b] = static_cast<char>(bits >> (8 * b));
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

DenseMatrix read_matrix(std::istream& in, std::size_t rows, std::size_t cols) {
  DenseMatrix m(rows, cols);
  std::string buf(rows * cols * 8, '\0');
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
    throw ValidationError("model payload truncated: expected " +
                          std::to_string(buf.size()) + " bytes");
  }
  for (std::size_t k = 0; k < rows * cols; ++k) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[k * 8 + b]))
              << (8 * b);
    }
    m.data()[k] = std::bit_cast<double>(bits);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ValidationError("trailing bytes after model payload");
  }
  return m;
}

void write_container(const json& header, const DenseMatrix& m, std::ostream& out) {
  out << kMagic << ' ' << kModelFormatVersion << '\n' << header.dump() << '\n';
  write_matrix(m, out);
  if (!out) throw ValidationError("failed writing model");
}

json read_header(std::istream& in, const char* expected_kind) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty model file");
  if (line != std::string(kMagic) + " " + std::to_string(kModelFormatVersion)) {
    throw ValidationError("not a model file or unsupported version: '" + line + "'");
  }
  if (!std::getline(in, line)) throw ValidationError("model header missing");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad model header: ") + e.what());
  }
  if (header.value("kind", "") != expected_kind) {
    throw ValidationError("model kind is '" + header.value("kind", "") +
                          "', expected '" + expected_kind + "'");
  }
  return header;
}

template <typename Model>
void save_to_path(const Model& model, const std::filesystem::path& path,
                  void (*save)(const Model&, std::ostream&)) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  save(model, out);
}

std::ifstream open_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

}  // namespace

void save_encoder(const EncoderModel& model, std::ostream& out) {
  json tags = json::array();
  for (const auto& t : model.vocabulary) tags.push_back({t.category, t.label});
  const auto& hp = model.hyperparams;
  const auto& rep = model.report;
  json header = {
      {"kind", "encoder"},
      {"rows", model.encoder.rows()},
      {"cols", model.encoder.cols()},
      {"hyperparams",
       {{"lambda1", hp.lambda1},
        {"lambda2", hp.lambda2},
        {"rho", hp.rho},
        {"max_iterations", hp.max_iterations},
        {"tolerance", hp.tolerance}}},
      {"tags", tags},
      {"items", model.item_ids},
      {"convergence",
       {{"iterations", rep.iterations},
        {"primal_residual", rep.primal_residual},
        {"dual_step", rep.dual_step},
        {"objective", rep.objective},
        {"converged", rep.converged}}},
  };
  if (tags.size() != static_cast<std::size_t>(model.encoder.cols())) {
    throw ValidationError("vocabulary size does not match encoder columns");
  }
  write_container(header, model.encoder, out);
}

void save_encoder(const EncoderModel& model, const std::filesystem::path& path) {
  save_to_path<EncoderModel>(model, path, &save_encoder);
}

EncoderModel load_encoder(std::istream& in) {
  const json header = read_header(in, "encoder");
  EncoderModel model;
  try {
    const auto rows = header.at("rows").get<std::size_t>();
    const auto cols = header.at("cols").get<std::size_t>();
    const auto& hp = header.at("hyperparams");
    model.hyperparams.lambda1 = hp.at("lambda1").get<double>();
    model.hyperparams.lambda2 = hp.at("lambda2").get<double>();
    model.hyperparams.rho = hp.at("rho").get<double>();
    model.hyperparams.max_iterations = hp.at("max_iterations").get<std::size_t>();
    model.hyperparams.tolerance = hp.at("tolerance").get<double>();
    for (const auto& t : header.at("tags")) {
      model.vocabulary.push_back({t.at(0).get<std::string>(), t.at(1).get<std::string>()});
    }
    model.item_ids = header.at("items").get<std::vector<std::string>>();
    const auto& c = header.at("convergence");
    model.report.iterations = c.at("iterations").get<std::size_t>();
    model.report.primal_residual = c.at("primal_residual").get<double>();
    model.report.dual_step = c.at("dual_step").get<double>();
    model.report.objective = c.at("objective").get<double>();
    model.report.converged = c.at("converged").get<bool>();
    if (model.vocabulary.size() != cols ||
        (!model.item_ids.empty() && model.item_ids.size() != rows)) {
      throw ValidationError("model header sizes are inconsistent");
    }
    model.encoder = read_matrix(in, rows, cols);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad model header: ") + e.what());
  }
  return model;
}

EncoderModel load_encoder(const std::filesystem::path& path) {
  auto in = open_model(path);
  return load_encoder(in);
}

void save_item_model(const ItemItemModel& model, std::ostream& out) {
  json header = {
      {"kind", "ease"},
      {"rows", model.weights.rows()},
      {"cols", model.weights.cols()},
      {"lambda", model.lambda},
      {"items", model.item_ids},
  };
  write_container(header, model.weights, out);
}

void save_item_model(const ItemItemModel& model,
                     const std::filesystem::path& path) {
  save_to_path<ItemItemModel>(model, path, &save_item_model);
}

ItemItemModel load_item_model(std::istream& in) {
  const json header = read_header(in, "ease");
  ItemItemModel model;
  try {
    const auto rows = header.at("rows").get<std::size_t>();
    const auto cols = header.at("cols").get<std::size_t>();
    if (rows != cols) throw ValidationError("EASE weights must be square");
    model.lambda = header.at("lambda").get<double>();
    model.item_ids = header.at("items").get<std::vector<std::string>>();
    if (!model.item_ids.empty() && model.item_ids.size() != rows) {
      throw ValidationError("model header sizes are inconsistent");
    }
    model.weights = read_matrix(in, rows, cols);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad model header: ") + e.what());
  }
  return model;
}

ItemItemModel load_item_model(const std::filesystem::path& path) {
  auto in = open_model(path);
  return load_item_model(in);
}

}  // namespace tease
