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

#include <cstring>
#include <random>
#include <sstream>

#include "gtest/gtest.h"
#include "tease/errors.h"

namespace tease {
namespace {

EncoderModel sample_model(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  EncoderModel m;
  m.encoder.resize(4, 3);
  for (int k = 0; k < m.encoder.size(); ++k) m.encoder.data()[k] = normal(rng);
  m.encoder(0, 0) = -0.0;
  m.encoder(3, 2) = 1e-310;  // subnormal
  m.vocabulary = {{"genre", "sci-fi, \"hard\""}, {"year", ">=2000"}, {"popularity", "popularity"}};
  m.item_ids = {"a", "b", "c", "\xC3\xA9t\xC3\xA9"};
  m.hyperparams.lambda1 = 0.1;
  m.hyperparams.lambda2 = 1.0 / 3.0;
  m.hyperparams.rho = 7.5;
  m.hyperparams.max_iterations = 42;
  m.hyperparams.tolerance = 1e-7;
  m.report = {17, 3.2e-7, 3.2e-7, 123.456789012345678, true};
  return m;
}

bool bit_equal(const DenseMatrix& a, const DenseMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

TEST(ModelIoTest, EncoderRoundTripIsBitExact) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto model = sample_model(seed);
    std::stringstream buf;
    save_encoder(model, buf);
    const auto loaded = load_encoder(buf);
    EXPECT_TRUE(bit_equal(model.encoder, loaded.encoder));
    EXPECT_EQ(loaded.vocabulary, model.vocabulary);
    EXPECT_EQ(loaded.item_ids, model.item_ids);
    EXPECT_EQ(loaded.hyperparams.lambda2, model.hyperparams.lambda2);
    EXPECT_EQ(loaded.hyperparams.rho, model.hyperparams.rho);
    EXPECT_EQ(loaded.hyperparams.max_iterations, 42u);
    EXPECT_EQ(loaded.report.objective, model.report.objective);
    EXPECT_TRUE(loaded.report.converged);

    std::stringstream again;
    save_encoder(loaded, again);
    EXPECT_EQ(again.str(), buf.str());
  }
}

TEST(ModelIoTest, PayloadIsLittleEndianRowMajor) {
  EncoderModel m;
  m.encoder.resize(1, 2);
  m.encoder << 1.0, -2.0;
  m.vocabulary = {{"c", "x"}, {"c", "y"}};
  std::stringstream buf;
  save_encoder(m, buf);
  const std::string bytes = buf.str();
  const std::string payload = bytes.substr(bytes.size() - 16);
  // 1.0 = 0x3FF0000000000000, -2.0 = 0xC000000000000000
  EXPECT_EQ(static_cast<unsigned char>(payload[7]), 0x3F);
  EXPECT_EQ(static_cast<unsigned char>(payload[6]), 0xF0);
  EXPECT_EQ(static_cast<unsigned char>(payload[15]), 0xC0);
  EXPECT_EQ(bytes.rfind("TEASE-MODEL 1\n", 0), 0u);
}

TEST(ModelIoTest, ItemModelRoundTrip) {
  ItemItemModel m;
  m.lambda = 250.0;
  m.weights = DenseMatrix::Random(3, 3);
  m.weights.diagonal().setZero();
  m.item_ids = {"x", "y", "z"};
  std::stringstream buf;
  save_item_model(m, buf);
  const auto loaded = load_item_model(buf);
  EXPECT_TRUE(bit_equal(m.weights, loaded.weights));
  EXPECT_EQ(loaded.lambda, 250.0);
  EXPECT_EQ(loaded.item_ids, m.item_ids);
}

TEST(ModelIoTest, CorruptInputsRejected) {
  std::stringstream buf;
  save_encoder(sample_model(1), buf);
  const std::string good = buf.str();

  std::stringstream truncated(good.substr(0, good.size() - 3));
  EXPECT_THROW(load_encoder(truncated), ValidationError);
  std::stringstream trailing(good + "x");
  EXPECT_THROW(load_encoder(trailing), ValidationError);
  std::stringstream wrong_magic("NOPE 1\n{}\n");
  EXPECT_THROW(load_encoder(wrong_magic), ValidationError);
  std::stringstream as_item(good);
  EXPECT_THROW(load_item_model(as_item), ValidationError);
}

}  // namespace
}  // namespace tease
