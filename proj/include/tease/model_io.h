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

#include <filesystem>
#include <iosfwd>

#include "tease/ease.h"
#include "tease/solver.h"

namespace tease {

// Model container:
//   line 1   "TEASE-MODEL 1"
//   line 2   JSON header (kind, rows, cols, hyperparameters, vocabulary,
//            item ids, convergence report) on a single line
//   rest     rows × cols little-endian IEEE-754 doubles, row-major
// Loading reproduces every matrix entry bit for bit.
inline constexpr int kModelFormatVersion = 1;

void save_encoder(const EncoderModel& model, std::ostream& out);
void save_encoder(const EncoderModel& model, const std::filesystem::path& path);
EncoderModel load_encoder(std::istream& in);
EncoderModel load_encoder(const std::filesystem::path& path);

void save_item_model(const ItemItemModel& model, std::ostream& out);
void save_item_model(const ItemItemModel& model,
                     const std::filesystem::path& path);
ItemItemModel load_item_model(std::istream& in);
ItemItemModel load_item_model(const std::filesystem::path& path);

}  // namespace tease
