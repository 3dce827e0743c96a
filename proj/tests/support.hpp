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

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Core>

#include "rtfm/common.hpp"
#include "rtfm/dataset.hpp"

namespace rtfm::testing {

// First n_train rows train, the rest test; all columns numeric.
inline TabularDataset make_dataset(Eigen::MatrixXd x, std::vector<int> y, int n_train, int n_classes) {
  TabularDataset ds;
  const auto n = static_cast<int>(x.rows());
  ds.missing = MissingMask::Constant(x.rows(), x.cols(), false);
  ds.feature_kinds.assign(static_cast<std::size_t>(x.cols()), FeatureKind::numeric());
  ds.x = std::move(x);
  ds.y = std::move(y);
  ds.n_classes = n_classes;
  for (int i = 0; i < n; ++i) (i < n_train ? ds.train_indices : ds.test_indices).push_back(i);
  ds.validate();
  return ds;
}

// Gaussian blobs centred at `centres` (one per class), `per_class` train and
// test rows each.
inline TabularDataset blobs(const std::vector<std::pair<double, double>>& centres, std::vector<int> labels,
                            int per_class_train, int per_class_test, double sd, std::uint64_t seed) {
  Rng rng(seed);
  const int k = static_cast<int>(centres.size());
  const int n = k * (per_class_train + per_class_test);
  Eigen::MatrixXd x(n, 2);
  std::vector<int> y(static_cast<std::size_t>(n));
  int row = 0;
  for (int pass = 0; pass < 2; ++pass)
    for (int c = 0; c < k; ++c)
      for (int i = 0; i < (pass == 0 ? per_class_train : per_class_test); ++i, ++row) {
        x(row, 0) = rng.normal(centres[static_cast<std::size_t>(c)].first, sd);
        x(row, 1) = rng.normal(centres[static_cast<std::size_t>(c)].second, sd);
        y[static_cast<std::size_t>(row)] = labels[static_cast<std::size_t>(c)];
      }
  const int n_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  return make_dataset(std::move(x), std::move(y), k * per_class_train, n_classes);
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("rtfm-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace rtfm::testing
