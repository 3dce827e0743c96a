// Copyright 2026 The rtfm Authors
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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "rtfm/theta.hpp"

namespace rtfm {

// Column kind. num_categories == 0 marks a numeric column.
struct FeatureKind {
  int num_categories = 0;
  bool ordered = false;

  bool is_categorical() const noexcept { return num_categories > 0; }
  static FeatureKind numeric() { return {}; }
  static FeatureKind categorical(int k, bool ordered) { return {k, ordered}; }
  friend bool operator==(const FeatureKind&, const FeatureKind&) = default;
};

struct Provenance {
  ThetaParams theta;
  std::uint64_t seed = 0;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

using MissingMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// A labeled table with its train/test split. Missing cells hold NaN in `x`
// and true in `missing`; only train rows may be masked.
struct TabularDataset {
  Eigen::MatrixXd x;
  MissingMask missing;
  std::vector<FeatureKind> feature_kinds;
  std::vector<int> y;
  int n_classes = 2;
  std::vector<int> train_indices;
  std::vector<int> test_indices;
  std::optional<Provenance> provenance;

  int rows() const noexcept { return static_cast<int>(x.rows()); }
  int cols() const noexcept { return static_cast<int>(x.cols()); }
  std::vector<int> test_labels() const;
  std::vector<int> train_labels() const;

  // Throws InvalidArgument on any broken invariant (shapes, label range,
  // split partition, masked test cells, categorical codes).
  void validate() const;
};

// CSV body: header f0..f{p-1},y; empty cell = missing; 17 significant digits.
std::string to_csv(const TabularDataset& ds);
// Sidecar: {theta, seed, feature_kinds, train_indices, test_indices, n_classes}.
nlohmann::json sidecar_json(const TabularDataset& ds);
TabularDataset from_csv(const std::string& csv, const nlohmann::json& sidecar);

void write_dataset(const TabularDataset& ds, const std::filesystem::path& csv_path,
                   const std::filesystem::path& json_path);
TabularDataset read_dataset(const std::filesystem::path& csv_path,
                            const std::filesystem::path& json_path);

// Inline wire form used by the model bridge: sidecar fields plus "columns"
// and "rows" (null = missing).
nlohmann::json to_payload(const TabularDataset& ds);
TabularDataset from_payload(const nlohmann::json& payload);

// Canonical serialization: sorted keys, no whitespace, doubles printed with
// 17 significant digits. Same value -> byte-identical text.
std::string canonical_dump(const nlohmann::json& j);
std::string format_double(double v);

// SHA-256 of the canonical payload.
std::string dataset_hash(const TabularDataset& ds);

}  // namespace rtfm
